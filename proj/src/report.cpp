#include "twinstream/report.hpp"

#include <cstdio>
#include <fstream>
#include <map>

#include "twinstream/errors.hpp"

namespace twinstream {

namespace {

void append_real(std::string& out, double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    out += buf;
}

}  // namespace

std::string intervals_csv_text(const std::vector<IntervalRow>& rows) {
    std::string out =
        "interval_index,group_id,n_members,K,predicted_radio_hz,actual_radio_hz,"
        "predicted_compute_cps,actual_compute_cps,accuracy_radio,accuracy_compute\n";
    for (const IntervalRow& r : rows) {
        out += std::to_string(r.interval_index) + "," + std::to_string(r.group_id) + "," +
               std::to_string(r.n_members) + "," + std::to_string(r.k) + ",";
        append_real(out, r.predicted_radio_hz);
        out += ",";
        append_real(out, r.actual_radio_hz);
        out += ",";
        append_real(out, r.predicted_compute_cps);
        out += ",";
        append_real(out, r.actual_compute_cps);
        out += ",";
        append_real(out, r.accuracy_radio);
        out += ",";
        append_real(out, r.accuracy_compute);
        out += "\n";
    }
    return out;
}

std::string cdf_csv_text(const std::vector<CdfRow>& rows) {
    std::string out = "interval_index,group_id,category,bin_x,F\n";
    for (const CdfRow& r : rows) {
        out += std::to_string(r.interval_index) + "," + std::to_string(r.group_id) + "," +
               std::to_string(r.category) + ",";
        append_real(out, r.bin_x);
        out += ",";
        append_real(out, r.f);
        out += "\n";
    }
    return out;
}

RunSummary summarize(const std::vector<IntervalRow>& rows, int intervals, double runtime_s) {
    RunSummary s;
    s.intervals = intervals;
    s.rows = static_cast<int>(rows.size());
    s.runtime_s = runtime_s;
    if (rows.empty()) return s;

    double acc_radio = 0.0, acc_compute = 0.0;
    std::map<int, int> k_by_interval;
    for (const IntervalRow& r : rows) {
        acc_radio += r.accuracy_radio;
        acc_compute += r.accuracy_compute;
        k_by_interval[r.interval_index] = r.k;
    }
    s.mean_radio_accuracy = acc_radio / rows.size();
    s.mean_compute_accuracy = acc_compute / rows.size();
    double k_sum = 0.0;
    for (const auto& [idx, k] : k_by_interval) k_sum += k;
    s.mean_k = k_sum / static_cast<double>(k_by_interval.size());
    return s;
}

std::string summary_text(const RunSummary& s) {
    std::string out;
    out += "mean_radio_accuracy: ";
    append_real(out, s.mean_radio_accuracy);
    out += "\nmean_compute_accuracy: ";
    append_real(out, s.mean_compute_accuracy);
    out += "\nmean_k: ";
    append_real(out, s.mean_k);
    out += "\nintervals: " + std::to_string(s.intervals);
    out += "\nrows: " + std::to_string(s.rows);
    out += "\nruntime_s: ";
    append_real(out, s.runtime_s);
    out += "\n";
    return out;
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoFailure("cannot open " + path + " for writing");
    f << text;
    if (!f) throw IoFailure("write to " + path + " failed");
}

}  // namespace twinstream

#pragma once

#include <string>
#include <vector>

namespace twinstream {

/// One prediction-vs-actual row of `intervals.csv`.
struct IntervalRow {
    int interval_index = 0;
    int group_id = 0;
    int n_members = 0;
    int k = 0;
    double predicted_radio_hz = 0.0;
    double actual_radio_hz = 0.0;
    double predicted_compute_cps = 0.0;
    double actual_compute_cps = 0.0;
    double accuracy_radio = 0.0;
    double accuracy_compute = 0.0;
};

/// One CDF grid point of `cdf.csv`.
struct CdfRow {
    int interval_index = 0;
    int group_id = 0;
    int category = 0;
    double bin_x = 0.0;
    double f = 0.0;
};

struct RunSummary {
    double mean_radio_accuracy = 0.0;
    double mean_compute_accuracy = 0.0;
    double mean_k = 0.0;
    int intervals = 0;
    int rows = 0;
    double runtime_s = 0.0;
};

std::string intervals_csv_text(const std::vector<IntervalRow>& rows);
std::string cdf_csv_text(const std::vector<CdfRow>& rows);

RunSummary summarize(const std::vector<IntervalRow>& rows, int intervals, double runtime_s);

void write_text_file(const std::string& path, const std::string& text);
std::string summary_text(const RunSummary& s);

}  // namespace twinstream

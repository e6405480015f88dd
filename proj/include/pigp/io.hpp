#pragma once

#include <map>
#include <string>
#include <vector>

#include "pigp/boundary.hpp"
#include "pigp/gp.hpp"

namespace pigp {

/// 17-significant-digit serialization; round-trips finite doubles exactly.
std::string format_double(double v);

/// CSV with header row: input columns first, target column last.
void write_training_set(const std::string& path, const TrainingSet& data,
                        const std::vector<std::string>& input_names = {});
TrainingSet read_training_set(const std::string& path);

/// Predictions CSV: inputs, mean, variance, lower/upper 3-sigma band.
void write_prediction(const std::string& path, const Mat& X, const Prediction& pred,
                      double band_noise_variance = 0.0);

/// Ordered key/value report ("key: value" lines). Deterministic apart from
/// whatever values the caller puts in; the runtime key is conventionally
/// "runtime_seconds" and excluded from byte-comparisons.
class Report {
public:
    void set(const std::string& key, const std::string& value);
    void set(const std::string& key, double value);
    void set(const std::string& key, long long value);

    std::string to_string() const;
    void write(const std::string& path) const;

    const std::vector<std::pair<std::string, std::string>>& entries() const {
        return entries_;
    }

    bool has(const std::string& key) const;
    std::string get(const std::string& key) const;

    static Report read(const std::string& path);

private:
    std::vector<std::pair<std::string, std::string>> entries_;
};

/// Mask grid file: one text row per grid row (top row = highest iy),
/// '.' = inside the domain, '#' = masked.
GridDomain read_mask_grid(const std::string& path, double spacing);
void write_mask_grid(const std::string& path, const GridDomain& domain);

/// Write via temp file + rename so readers never observe partial output.
void atomic_write(const std::string& path, const std::string& contents);

} // namespace pigp

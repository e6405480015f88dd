#include "pigp/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "pigp/errors.hpp"

namespace pigp {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

double parse_double(const std::string& s, int line_no) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ParseError("line " + std::to_string(line_no) + ": cannot parse number '" + s + "'");
    }
}

} // namespace

void atomic_write(const std::string& path, const std::string& contents) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open " + tmp + " for writing");
        out << contents;
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        throw std::runtime_error("rename to " + path + " failed");
    }
}

void write_training_set(const std::string& path, const TrainingSet& data,
                        const std::vector<std::string>& input_names) {
    data.validate();
    std::ostringstream out;
    for (Eigen::Index d = 0; d < data.X.cols(); ++d) {
        if (static_cast<std::size_t>(d) < input_names.size()) {
            out << input_names[d];
        } else {
            out << "input_" << d;
        }
        out << ",";
    }
    out << "target\n";
    for (Eigen::Index i = 0; i < data.X.rows(); ++i) {
        for (Eigen::Index d = 0; d < data.X.cols(); ++d) {
            out << format_double(data.X(i, d)) << ",";
        }
        out << format_double(data.y[i]) << "\n";
    }
    atomic_write(path, out.str());
}

TrainingSet read_training_set(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw ParseError("line 1: empty dataset file");
    const auto header = split_csv_line(line);
    if (header.empty() || header.back() != "target") {
        throw ParseError("line 1: final column must be named 'target'");
    }
    const int ncols = static_cast<int>(header.size());

    std::vector<std::vector<double>> rows;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (static_cast<int>(fields.size()) != ncols) {
            throw ParseError("line " + std::to_string(line_no) + ": expected " +
                             std::to_string(ncols) + " fields, got " +
                             std::to_string(fields.size()));
        }
        std::vector<double> row(ncols);
        for (int c = 0; c < ncols; ++c) row[c] = parse_double(fields[c], line_no);
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ParseError("dataset has no data rows");

    TrainingSet data;
    data.X.resize(static_cast<Eigen::Index>(rows.size()), ncols - 1);
    data.y.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (int c = 0; c < ncols - 1; ++c) data.X(static_cast<Eigen::Index>(i), c) = rows[i][c];
        data.y[static_cast<Eigen::Index>(i)] = rows[i][ncols - 1];
    }
    return data;
}

void write_prediction(const std::string& path, const Mat& X, const Prediction& pred,
                      double band_noise_variance) {
    std::ostringstream out;
    for (Eigen::Index d = 0; d < X.cols(); ++d) out << "input_" << d << ",";
    out << "mean,variance,lower_3sd,upper_3sd\n";
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        const double band_var = pred.variance[i] + band_noise_variance;
        const double sd = std::sqrt(std::max(band_var, 0.0));
        for (Eigen::Index d = 0; d < X.cols(); ++d) out << format_double(X(i, d)) << ",";
        out << format_double(pred.mean[i]) << "," << format_double(pred.variance[i]) << ","
            << format_double(pred.mean[i] - 3.0 * sd) << ","
            << format_double(pred.mean[i] + 3.0 * sd) << "\n";
    }
    atomic_write(path, out.str());
}

void Report::set(const std::string& key, const std::string& value) {
    for (auto& [k, v] : entries_) {
        if (k == key) {
            v = value;
            return;
        }
    }
    entries_.emplace_back(key, value);
}

void Report::set(const std::string& key, double value) { set(key, format_double(value)); }

void Report::set(const std::string& key, long long value) { set(key, std::to_string(value)); }

bool Report::has(const std::string& key) const {
    for (const auto& [k, v] : entries_) {
        if (k == key) return true;
    }
    return false;
}

std::string Report::get(const std::string& key) const {
    for (const auto& [k, v] : entries_) {
        if (k == key) return v;
    }
    throw std::out_of_range("report has no key '" + key + "'");
}

std::string Report::to_string() const {
    std::ostringstream out;
    for (const auto& [k, v] : entries_) out << k << ": " << v << "\n";
    return out.str();
}

void Report::write(const std::string& path) const { atomic_write(path, to_string()); }

Report Report::read(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    Report r;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto colon = line.find(": ");
        if (colon == std::string::npos) {
            throw ParseError("line " + std::to_string(line_no) + ": expected 'key: value'");
        }
        r.entries_.emplace_back(line.substr(0, colon), line.substr(colon + 2));
    }
    return r;
}

GridDomain read_mask_grid(const std::string& path, double spacing) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty()) lines.push_back(line);
    }
    if (lines.empty()) throw ParseError("mask grid file is empty");
    const std::size_t nx = lines.front().size();
    GridDomain d;
    d.nx = static_cast<int>(nx);
    d.ny = static_cast<int>(lines.size());
    d.spacing = spacing;
    d.mask.assign(nx * lines.size(), 0);
    for (std::size_t r = 0; r < lines.size(); ++r) {
        if (lines[r].size() != nx) {
            throw ParseError("line " + std::to_string(r + 1) + ": ragged mask row");
        }
        const int iy = d.ny - 1 - static_cast<int>(r);   // top text row = highest iy
        for (std::size_t c = 0; c < nx; ++c) {
            if (lines[r][c] == '.') {
                d.mask[iy * d.nx + static_cast<int>(c)] = 1;
            } else if (lines[r][c] != '#') {
                throw ParseError("line " + std::to_string(r + 1) +
                                 ": mask characters must be '.' or '#'");
            }
        }
    }
    d.validate();
    return d;
}

void write_mask_grid(const std::string& path, const GridDomain& domain) {
    std::ostringstream out;
    for (int iy = domain.ny - 1; iy >= 0; --iy) {
        for (int ix = 0; ix < domain.nx; ++ix) {
            out << (domain.inside(ix, iy) ? '.' : '#');
        }
        out << "\n";
    }
    atomic_write(path, out.str());
}

} // namespace pigp

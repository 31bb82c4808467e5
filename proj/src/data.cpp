#include "npvar/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "npvar/errors.hpp"
#include "npvar/rng.hpp"

namespace npvar {

Dataset::Dataset(std::vector<std::string> names, std::vector<std::vector<double>> columns)
    : names_(std::move(names)), cols_(std::move(columns)) {
    if (cols_.empty() || names_.size() != cols_.size())
        throw data_error("Dataset: column/name count mismatch");
    n_ = static_cast<int>(cols_[0].size());
    if (n_ < 1) throw data_error("Dataset: need at least one row");
    for (size_t j = 0; j < cols_.size(); ++j) {
        if (static_cast<int>(cols_[j].size()) != n_)
            throw data_error("Dataset: ragged column '" + names_[j] + "'");
        for (int i = 0; i < n_; ++i)
            if (!std::isfinite(cols_[j][i]))
                throw data_error("Dataset: non-finite value at row " + std::to_string(i + 1) +
                                 ", column '" + names_[j] + "'");
    }
}

Dataset Dataset::select_rows(const std::vector<int>& rows) const {
    std::vector<std::vector<double>> out(cols_.size());
    for (size_t j = 0; j < cols_.size(); ++j) {
        out[j].reserve(rows.size());
        for (int r : rows) out[j].push_back(cols_[j][r]);
    }
    return Dataset(names_, std::move(out));
}

void Dataset::write_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw data_error("write_csv: cannot open " + path);
    for (size_t j = 0; j < names_.size(); ++j)
        out << (j ? "," : "") << names_[j];
    out << "\n";
    char buf[40];
    for (int i = 0; i < n_; ++i) {
        for (size_t j = 0; j < cols_.size(); ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", cols_[j][i]);
            if (j) out << ',';
            out << buf;
        }
        out << "\n";
    }
    if (!out) throw data_error("write_csv: write failed for " + path);
}

Dataset Dataset::read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw data_error("read_csv: cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw data_error("read_csv: empty file " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();

    std::vector<std::string> names;
    {
        std::istringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) names.push_back(field);
    }
    const size_t d = names.size();
    if (d == 0) throw data_error("read_csv: empty header in " + path);

    std::vector<std::vector<double>> cols(d);
    int row = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        ++row;
        std::istringstream ss(line);
        std::string field;
        size_t j = 0;
        while (std::getline(ss, field, ',')) {
            if (j >= d)
                throw data_error("read_csv: too many fields at row " + std::to_string(row) +
                                 " of " + path);
            char* end = nullptr;
            double v = std::strtod(field.c_str(), &end);
            if (end == field.c_str() || *end != '\0')
                throw data_error("read_csv: unparseable value '" + field + "' at row " +
                                 std::to_string(row) + ", column '" + names[j] + "'");
            if (!std::isfinite(v))
                throw data_error("read_csv: non-finite value at row " + std::to_string(row) +
                                 ", column '" + names[j] + "'");
            cols[j].push_back(v);
            ++j;
        }
        if (j != d)
            throw data_error("read_csv: expected " + std::to_string(d) + " fields at row " +
                             std::to_string(row) + ", found " + std::to_string(j));
    }
    if (row == 0) throw data_error("read_csv: no data rows in " + path);
    return Dataset(std::move(names), std::move(cols));
}

SplitPair split_half(const Dataset& ds, std::uint64_t seed) {
    const int n = ds.row_count();
    if (n < 4) throw config_error("split_half: need at least 4 rows");

    std::vector<int> idx(n);
    for (int i = 0; i < n; ++i) idx[i] = i;
    Rng rng(seed);
    for (int i = n - 1; i > 0; --i) {
        int k = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(i) + 1));
        std::swap(idx[i], idx[k]);
    }

    const int n_first = (n + 1) / 2;
    std::vector<int> first(idx.begin(), idx.begin() + n_first);
    std::vector<int> second(idx.begin() + n_first, idx.end());
    std::sort(first.begin(), first.end());
    std::sort(second.begin(), second.end());
    return SplitPair{ds.select_rows(first), ds.select_rows(second)};
}

}  // namespace npvar

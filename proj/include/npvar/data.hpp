#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace npvar {

// Immutable column-major sample matrix with column names. All entries are
// finite; every column has the same length n >= 1.
class Dataset {
public:
    Dataset(std::vector<std::string> names, std::vector<std::vector<double>> columns);

    int row_count() const { return n_; }
    int col_count() const { return static_cast<int>(cols_.size()); }
    std::span<const double> col(int j) const { return cols_[j]; }
    const std::string& name(int j) const { return names_[j]; }
    const std::vector<std::string>& names() const { return names_; }

    // New dataset containing the given rows, in the given order.
    Dataset select_rows(const std::vector<int>& rows) const;

    void write_csv(const std::string& path) const;
    static Dataset read_csv(const std::string& path);

private:
    int n_;
    std::vector<std::string> names_;
    std::vector<std::vector<double>> cols_;
};

struct SplitPair {
    Dataset first;   // fit half, ceil(n/2) rows
    Dataset second;  // evaluation half, floor(n/2) rows
};

// Uniformly random row partition, deterministic per seed. Row order within
// each half follows the original dataset.
SplitPair split_half(const Dataset& ds, std::uint64_t seed);

}  // namespace npvar

#pragma once

// Probability tables over small discrete index spaces, stored as exact
// rationals.  Input weights are validated (non-negative, total within 1e-12
// of 1) and then renormalized by exact division, so downstream enumeration
// works with a distribution that sums to exactly 1.

#include "bell/rational.hpp"
#include "bell/types.hpp"

#include <cstddef>
#include <string>
#include <vector>

namespace bell {

class ProbTable {
public:
    ProbTable() = default;

    explicit ProbTable(std::vector<std::size_t> shape)
        : shape_(std::move(shape)), w_(flat_size(shape_), BigQ(0)) {}

    static ProbTable uniform(std::vector<std::size_t> shape) {
        ProbTable t(std::move(shape));
        const BigQ u(1, static_cast<long long>(t.w_.size()));
        for (auto& q : t.w_) q = u;
        return t;
    }

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t size() const { return w_.size(); }

    BigQ& flat(std::size_t i) { return w_.at(i); }
    const BigQ& flat(std::size_t i) const { return w_.at(i); }

    BigQ& at(std::size_t i) {
        check_rank(1);
        return w_.at(i);
    }
    const BigQ& at(std::size_t i) const {
        check_rank(1);
        return w_.at(i);
    }
    BigQ& at(std::size_t i, std::size_t j) {
        check_rank(2);
        return w_.at(i * shape_[1] + j);
    }
    const BigQ& at(std::size_t i, std::size_t j) const {
        check_rank(2);
        return w_.at(i * shape_[1] + j);
    }

    BigQ total() const {
        BigQ s(0);
        for (const auto& q : w_) s += q;
        return s;
    }

    // `where` names the table in error messages ("recipe.weights.source").
    void validate_and_normalize(const std::string& where) {
        if (w_.empty())
            throw config_error(where + ": empty probability table");
        for (std::size_t i = 0; i < w_.size(); ++i)
            if (w_[i] < 0)
                throw config_error(where + ": negative weight at flat index " +
                                   std::to_string(i));
        const BigQ s = total();
        if (s == 0) throw config_error(where + ": weights sum to zero");
        const double err = std::abs(to_double(s) - 1.0);
        if (err > 1e-12)
            throw config_error(where + ": weights sum to " + rational_to_string(s) +
                               " (off by more than 1e-12 from 1)");
        if (s != 1)
            for (auto& q : w_) q /= s;
    }

    bool operator==(const ProbTable& o) const {
        return shape_ == o.shape_ && w_ == o.w_;
    }

private:
    static std::size_t flat_size(const std::vector<std::size_t>& shape) {
        std::size_t n = 1;
        for (auto d : shape) n *= d;
        return shape.empty() ? 0 : n;
    }
    void check_rank(std::size_t r) const {
        if (shape_.size() != r)
            throw std::logic_error("ProbTable: rank mismatch");
    }

    std::vector<std::size_t> shape_;
    std::vector<BigQ> w_;
};

}  // namespace bell

#pragma once

#include <Eigen/Dense>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pcd/graph.hpp"

namespace pcd {

/**
 * An n-by-p sample matrix whose column j holds the observations of node j.
 * Second moments (covariance, correlation) are computed once on demand and
 * shared across copies; concurrent readers are safe.
 */
class Dataset {
  public:
    Dataset(Eigen::MatrixXd matrix, std::uint64_t seed = 0)
        : x_(std::move(matrix)), seed_(seed), cache_(std::make_shared<MomentCache>()) {
        if (x_.rows() < 1) throw std::invalid_argument("Dataset: need at least one row");
        if (x_.cols() < 1) throw std::invalid_argument("Dataset: need at least one column");
    }

    int n() const { return static_cast<int>(x_.rows()); }
    int p() const { return static_cast<int>(x_.cols()); }
    std::uint64_t seed() const { return seed_; }
    const Eigen::MatrixXd& matrix() const { return x_; }

    // Sample covariance with 1/(n-1) normalization (zero matrix when n == 1).
    const Eigen::MatrixXd& covariance() const {
        ensure_moments();
        return cache_->cov;
    }

    // Correlation derived from the covariance; rows/columns of degenerate
    // (near-constant) nodes fall back to the identity pattern.
    const Eigen::MatrixXd& correlation() const {
        ensure_moments();
        return cache_->corr;
    }

    // Nodes whose sample variance is numerically zero, ascending.
    const std::vector<NodeId>& degenerate_columns() const {
        ensure_moments();
        return cache_->degenerate;
    }

  private:
    struct MomentCache {
        std::once_flag once;
        Eigen::MatrixXd cov, corr;
        std::vector<NodeId> degenerate;
    };

    void ensure_moments() const {
        std::call_once(cache_->once, [this] {
            const int n = this->n(), p = this->p();
            MomentCache& c = *cache_;
            if (n < 2) {
                c.cov = Eigen::MatrixXd::Zero(p, p);
            } else {
                Eigen::RowVectorXd mean = x_.colwise().mean();
                Eigen::MatrixXd centered = x_.rowwise() - mean;
                c.cov = (centered.adjoint() * centered) / static_cast<double>(n - 1);
            }
            Eigen::VectorXd sd(p);
            for (int j = 0; j < p; ++j) {
                double var = c.cov(j, j);
                if (var < 1e-14) {
                    c.degenerate.push_back(j);
                    sd(j) = 0.0;
                } else {
                    sd(j) = std::sqrt(var);
                }
            }
            c.corr = Eigen::MatrixXd::Identity(p, p);
            for (int i = 0; i < p; ++i)
                for (int j = 0; j < p; ++j)
                    if (i != j && sd(i) > 0.0 && sd(j) > 0.0)
                        c.corr(i, j) = c.cov(i, j) / (sd(i) * sd(j));
        });
    }

    Eigen::MatrixXd x_;
    std::uint64_t seed_;
    std::shared_ptr<MomentCache> cache_;
};

// ---------------------------------------------------------------------------
// CSV round trip.  Header row lists the node ids 0..p-1; every following row
// holds p comma-separated values printed with full double precision.
// ---------------------------------------------------------------------------
inline std::string to_csv(const Dataset& data) {
    std::ostringstream out;
    out.precision(std::numeric_limits<double>::max_digits10);
    for (int j = 0; j < data.p(); ++j) {
        if (j) out << ',';
        out << j;
    }
    out << '\n';
    for (int r = 0; r < data.n(); ++r) {
        for (int j = 0; j < data.p(); ++j) {
            if (j) out << ',';
            out << data.matrix()(r, j);
        }
        out << '\n';
    }
    return out.str();
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(field);
            field.clear();
        } else {
            field += ch;
        }
    }
    out.push_back(field);
    return out;
}

}  // namespace detail

inline Dataset dataset_from_csv(const std::string& text, std::uint64_t seed = 0) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("dataset CSV: empty input");
    std::vector<std::string> header = detail::split_csv_line(line);
    const int p = static_cast<int>(header.size());
    for (int j = 0; j < p; ++j)
        if (header[static_cast<size_t>(j)] != std::to_string(j))
            throw std::runtime_error("dataset CSV: header field " + std::to_string(j) +
                                     " must be the node id " + std::to_string(j) + ", got '" +
                                     header[static_cast<size_t>(j)] + "'");
    std::vector<double> values;
    size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<std::string> fields = detail::split_csv_line(line);
        if (static_cast<int>(fields.size()) != p)
            throw std::runtime_error("dataset CSV line " + std::to_string(line_no) + ": expected " +
                                     std::to_string(p) + " fields, got " +
                                     std::to_string(fields.size()));
        for (const std::string& f : fields) {
            double v = 0.0;
            auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
            if (ec != std::errc() || ptr != f.data() + f.size())
                throw std::runtime_error("dataset CSV line " + std::to_string(line_no) +
                                         ": bad number '" + f + "'");
            values.push_back(v);
        }
    }
    if (values.empty()) throw std::runtime_error("dataset CSV: no data rows");
    const int n = static_cast<int>(values.size()) / p;
    Eigen::MatrixXd x(n, p);
    for (int r = 0; r < n; ++r)
        for (int j = 0; j < p; ++j) x(r, j) = values[static_cast<size_t>(r * p + j)];
    return Dataset(std::move(x), seed);
}

}  // namespace pcd

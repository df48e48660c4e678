#include "clbpface/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace clbpface {

double chi_square(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) {
        throw std::invalid_argument("chi_square: length mismatch (" + std::to_string(x.size()) + " vs " +
                                    std::to_string(y.size()) + ")");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double s = x[i] + y[i];
        if (s != 0.0) {
            const double d = x[i] - y[i];
            sum += d * d / s;
        }
    }
    return sum;
}

int nn_classify(std::span<const std::vector<double>> gallery, std::span<const int> labels,
                std::span<const double> probe) {
    if (gallery.empty()) throw std::invalid_argument("nn_classify: empty gallery");
    if (gallery.size() != labels.size()) throw std::invalid_argument("nn_classify: gallery/label count mismatch");
    std::size_t best = 0;
    double best_distance = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < gallery.size(); ++i) {
        const double d = chi_square(gallery[i], probe);
        if (d < best_distance) {
            best_distance = d;
            best = i;
        }
    }
    return labels[best];
}

// ---------------------------------------------------------------------------

double largest_eigenvalue(const Eigen::MatrixXd& gram, int max_iter, double tol) {
    const Eigen::Index n = gram.rows();
    if (n == 0) return 0.0;
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = 1.0 + 0.1 * static_cast<double>(i % 7);
    v.normalize();
    double estimate = 0.0;
    for (int k = 0; k < max_iter; ++k) {
        Eigen::VectorXd w = gram * v;
        const double norm = w.norm();
        if (norm == 0.0) return 0.0;
        v = w / norm;
        const bool settled = std::abs(norm - estimate) <= tol * norm;
        estimate = norm;
        if (settled) break;
    }
    return estimate;
}

double lasso_objective(const Eigen::MatrixXd& A, const Eigen::VectorXd& y, const Eigen::VectorXd& alpha,
                       double lambda) {
    return 0.5 * (A * alpha - y).squaredNorm() + lambda * alpha.lpNorm<1>();
}

namespace {

// Safety factor on the power-iteration estimate, which approaches the true
// eigenvalue from below.
constexpr double kLipschitzMargin = 1.01;

void check_params(const SolverParams& params) {
    if (!(params.lambda > 0.0) || !std::isfinite(params.lambda)) throw std::invalid_argument("solver lambda must be > 0");
    if (params.max_iter < 1) throw std::invalid_argument("solver max_iter must be >= 1");
    if (!(params.tol >= 0.0)) throw std::invalid_argument("solver tol must be >= 0");
}

// FISTA on (1/2) a'Ga - a'b + yy/2 + lambda |a|_1, G = A'A, b = A'y.
SparseSolution fista(const Eigen::MatrixXd& G, const Eigen::VectorXd& b, double yy, double lipschitz,
                     const SolverParams& params) {
    const Eigen::Index n = G.cols();
    const double lambda = params.lambda;

    SparseSolution sol;
    sol.lambda = lambda;
    sol.coefficients = Eigen::VectorXd::Zero(n);

    // zero is optimal iff |A'y|_inf <= lambda
    if (n == 0 || b.cwiseAbs().maxCoeff() <= lambda) {
        sol.converged = true;
        return sol;
    }

    const double L = lipschitz > 0.0 ? lipschitz : 1.0;
    auto objective = [&](const Eigen::VectorXd& a) {
        return 0.5 * a.dot(G * a) - a.dot(b) + 0.5 * yy + lambda * a.lpNorm<1>();
    };

    Eigen::VectorXd x = sol.coefficients;
    Eigen::VectorXd z = x;
    Eigen::VectorXd next(n);
    double t = 1.0;
    double fx = objective(x);
    bool restarted = false;

    int k = 0;
    while (k < params.max_iter) {
        ++k;
        const Eigen::VectorXd step = z - least_squares_gradient(G, b, z) / L;
        for (Eigen::Index j = 0; j < n; ++j) next[j] = soft_threshold(step[j], lambda / L);
        const double fn = objective(next);

        if (fn > fx) {
            // a plain proximal step from x cannot increase the objective, so a
            // second increase means we are at rounding level
            if (restarted) {
                sol.converged = true;
                break;
            }
            t = 1.0;
            z = x;
            restarted = true;
            continue;
        }
        restarted = false;

        const double decrease = fx - fn;
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        z = next + ((t - 1.0) / t_next) * (next - x);
        x = next;
        t = t_next;
        const double previous = fx;
        fx = fn;
        if (decrease <= params.tol * std::max(previous, std::numeric_limits<double>::min())) {
            sol.converged = true;
            break;
        }
    }

    sol.coefficients = std::move(x);
    sol.iterations = k;
    return sol;
}

}  // namespace

SparseSolution solve_l1(const Eigen::MatrixXd& A, const Eigen::VectorXd& y, const SolverParams& params) {
    check_params(params);
    if (A.rows() != y.size()) throw std::invalid_argument("solve_l1: A has " + std::to_string(A.rows()) +
                                                          " rows but y has " + std::to_string(y.size()));
    if (!A.allFinite() || !y.allFinite()) throw std::invalid_argument("solve_l1: non-finite input");
    const Eigen::MatrixXd G = A.transpose() * A;
    const double L = kLipschitzMargin * largest_eigenvalue(G);
    SparseSolution sol = fista(G, A.transpose() * y, y.squaredNorm(), L, params);
    sol.final_objective = lasso_objective(A, y, sol.coefficients, params.lambda);
    return sol;
}

SparseSolution solve_l1(const Dictionary& dict, const Eigen::VectorXd& y, const SolverParams& params) {
    check_params(params);
    if (dict.rows() != y.size()) throw std::invalid_argument("solve_l1: probe length does not match dictionary");
    if (!y.allFinite()) throw std::invalid_argument("solve_l1: non-finite input");
    const auto& A = dict.columns();
    SparseSolution sol = fista(dict.gram(), A.transpose() * y, y.squaredNorm(), dict.lipschitz(), params);
    sol.final_objective = lasso_objective(A, y, sol.coefficients, params.lambda);
    return sol;
}

// ---------------------------------------------------------------------------

Dictionary::Dictionary(std::span<const std::vector<double>> features, std::span<const int> labels) {
    if (features.empty()) throw std::invalid_argument("dictionary needs at least one training vector");
    if (features.size() != labels.size()) throw std::invalid_argument("dictionary: feature/label count mismatch");
    const std::size_t m = features.front().size();
    if (m == 0) throw std::invalid_argument("dictionary: empty feature vectors");

    source_.resize(features.size());
    std::iota(source_.begin(), source_.end(), std::size_t{0});
    std::stable_sort(source_.begin(), source_.end(), [&](std::size_t a, std::size_t b) { return labels[a] < labels[b]; });

    columns_.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(features.size()));
    for (std::size_t c = 0; c < source_.size(); ++c) {
        const auto& f = features[source_[c]];
        if (f.size() != m) {
            throw std::invalid_argument("dictionary: vector " + std::to_string(source_[c]) + " has length " +
                                        std::to_string(f.size()) + ", expected " + std::to_string(m));
        }
        const Eigen::Map<const Eigen::VectorXd> v(f.data(), static_cast<Eigen::Index>(m));
        if (!v.allFinite()) throw std::invalid_argument("dictionary: non-finite value in vector " + std::to_string(source_[c]));
        const double norm = v.norm();
        if (norm == 0.0) throw std::invalid_argument("dictionary: vector " + std::to_string(source_[c]) + " is zero");
        columns_.col(static_cast<Eigen::Index>(c)) = v / norm;
        column_norms_.push_back(norm);
        labels_.push_back(labels[source_[c]]);
        if (classes_.empty() || classes_.back() != labels_.back()) classes_.push_back(labels_.back());
    }
    gram_ = columns_.transpose() * columns_;
    lipschitz_ = kLipschitzMargin * largest_eigenvalue(gram_);
}

std::vector<double> class_residuals(const Dictionary& dict, const Eigen::VectorXd& alpha, const Eigen::VectorXd& y) {
    if (alpha.size() != dict.cols()) {
        throw std::invalid_argument("class_residuals: " + std::to_string(alpha.size()) + " coefficients for " +
                                    std::to_string(dict.cols()) + " columns");
    }
    if (y.size() != dict.rows()) throw std::invalid_argument("class_residuals: probe length does not match dictionary");
    const auto& labels = dict.labels();
    std::vector<double> residuals;
    residuals.reserve(dict.classes().size());
    Eigen::Index begin = 0;
    for (int cls : dict.classes()) {
        Eigen::Index end = begin;
        while (end < dict.cols() && labels[static_cast<std::size_t>(end)] == cls) ++end;
        const Eigen::VectorXd recon = dict.columns().middleCols(begin, end - begin) * alpha.segment(begin, end - begin);
        residuals.push_back((y - recon).norm());
        begin = end;
    }
    return residuals;
}

SrcResult src_classify(const Dictionary& dict, std::span<const double> probe, const SolverParams& params) {
    if (static_cast<Eigen::Index>(probe.size()) != dict.rows()) {
        throw std::invalid_argument("src_classify: probe length " + std::to_string(probe.size()) +
                                    " does not match dictionary rows " + std::to_string(dict.rows()));
    }
    Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(probe.data(), static_cast<Eigen::Index>(probe.size()));
    if (!y.allFinite()) throw std::invalid_argument("src_classify: non-finite probe");
    const double norm = y.norm();
    if (norm == 0.0) throw std::invalid_argument("src_classify: zero probe cannot be normalized");
    y /= norm;

    SrcResult result;
    result.solution = solve_l1(dict, y, params);
    result.residuals = class_residuals(dict, result.solution.coefficients, y);
    const auto best = std::min_element(result.residuals.begin(), result.residuals.end());
    result.predicted = dict.classes()[static_cast<std::size_t>(best - result.residuals.begin())];
    return result;
}

}  // namespace clbpface

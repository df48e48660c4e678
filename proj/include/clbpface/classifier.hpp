#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <vector>

namespace clbpface {

// ---------------------------------------------------------------------------
// Chi-square nearest neighbor

/// sum_i (x_i - y_i)^2 / (x_i + y_i); terms with x_i + y_i = 0 contribute 0.
double chi_square(std::span<const double> x, std::span<const double> y);

/// Label of the gallery vector closest to `probe` in chi-square distance.
/// Ties go to the lowest gallery index.
int nn_classify(std::span<const std::vector<double>> gallery, std::span<const int> labels,
                std::span<const double> probe);

// ---------------------------------------------------------------------------
// Sparse representation

/// Unit-norm training columns grouped by class, with the Gram matrix and the
/// Lipschitz constant of the least-squares gradient cached for repeated solves.
class Dictionary {
public:
    /// Columns are ordered by (class ascending, input order). Throws on empty
    /// input, inconsistent lengths or a zero vector.
    Dictionary(std::span<const std::vector<double>> features, std::span<const int> labels);

    const Eigen::MatrixXd& columns() const { return columns_; }
    const std::vector<int>& labels() const { return labels_; }
    const std::vector<double>& column_norms() const { return column_norms_; }
    /// Input index of each column.
    const std::vector<std::size_t>& source_index() const { return source_; }
    /// Distinct class labels, ascending. Residuals are reported in this order.
    const std::vector<int>& classes() const { return classes_; }

    Eigen::Index rows() const { return columns_.rows(); }
    Eigen::Index cols() const { return columns_.cols(); }

    const Eigen::MatrixXd& gram() const { return gram_; }
    double lipschitz() const { return lipschitz_; }

private:
    Eigen::MatrixXd columns_;
    std::vector<int> labels_;
    std::vector<double> column_norms_;
    std::vector<std::size_t> source_;
    std::vector<int> classes_;
    Eigen::MatrixXd gram_;
    double lipschitz_ = 0;
};

inline Dictionary build_dictionary(std::span<const std::vector<double>> features, std::span<const int> labels) {
    return Dictionary(features, labels);
}

struct SolverParams {
    double lambda = 0.01;
    int max_iter = 2000;
    double tol = 1e-8;  // relative objective decrease that ends the iteration
};

struct SparseSolution {
    Eigen::VectorXd coefficients;
    int iterations = 0;
    double final_objective = 0;
    double lambda = 0;
    bool converged = false;
};

/// Largest eigenvalue of the symmetric positive semidefinite `gram` by power
/// iteration from a fixed start vector.
double largest_eigenvalue(const Eigen::MatrixXd& gram, int max_iter = 500, double tol = 1e-12);

/// (1/2)||A a - y||^2 + lambda ||a||_1
double lasso_objective(const Eigen::MatrixXd& A, const Eigen::VectorXd& y, const Eigen::VectorXd& alpha,
                       double lambda);

/// Gradient of (1/2)||A a - y||^2 in Gram form: G a - A'y with G = A'A.
inline Eigen::VectorXd least_squares_gradient(const Eigen::MatrixXd& gram, const Eigen::VectorXd& aty,
                                              const Eigen::VectorXd& alpha) {
    return gram * alpha - aty;
}

inline double soft_threshold(double v, double t) { return v > t ? v - t : (v < -t ? v + t : 0.0); }

/// Lasso relaxation of min ||a||_1 s.t. A a = y, solved with accelerated
/// proximal gradient (FISTA): step 1/L with L from power iteration on A^T A,
/// monotone safeguard with momentum restart. Non-convergence is reported in
/// the result, not thrown.
SparseSolution solve_l1(const Eigen::MatrixXd& A, const Eigen::VectorXd& y, const SolverParams& params = {});

/// Same solve reusing the dictionary's cached Gram matrix and Lipschitz bound.
SparseSolution solve_l1(const Dictionary& dict, const Eigen::VectorXd& y, const SolverParams& params = {});

/// ||y - A delta_i(alpha)||_2 per class, where delta_i keeps only the
/// coefficients of class i's columns. Ordered like dict.classes().
std::vector<double> class_residuals(const Dictionary& dict, const Eigen::VectorXd& alpha, const Eigen::VectorXd& y);

struct SrcResult {
    int predicted = -1;
    std::vector<double> residuals;  // ordered like Dictionary::classes()
    SparseSolution solution;
};

/// Normalizes the probe to unit norm, solves for its sparse code and returns
/// the class with the smallest residual (ties: lowest class).
SrcResult src_classify(const Dictionary& dict, std::span<const double> probe, const SolverParams& params = {});

}  // namespace clbpface

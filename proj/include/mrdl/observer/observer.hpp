#pragma once

#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "mrdl/core/field.hpp"

namespace mrdl::observer {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Which real-valued view of a complex image the observer reads.
enum class ObserverInput { Magnitude, Real };

const char* to_string(ObserverInput v);
ObserverInput observer_input_from_string(std::string_view s);

/// ROI pixels in row-major order.
Vector roi_vector(const ComplexField& field, const Roi& roi, ObserverInput input);

/// Sample count, mean and centered scatter of a set of vectors. Groups merge
/// without revisiting samples, which lets bootstrap folds reuse them.
struct Moments {
    std::size_t n = 0;
    Vector mean;
    Matrix scatter;

    /// Rows of `samples` are observations.
    static Moments of(const Matrix& samples);
    Moments& merge(const Moments& other);
};

struct ClassStats {
    Vector mean_absent;
    Vector mean_present;
    Matrix covariance;  // pooled, divisor n0 + n1 - 2
    std::size_t n_absent = 0;
    std::size_t n_present = 0;
    Roi roi;

    Vector difference() const { return mean_present - mean_absent; }
    std::size_t dimension() const { return static_cast<std::size_t>(mean_absent.size()); }
};

ClassStats pooled_stats(const Moments& absent, const Moments& present, const Roi& roi);

ClassStats estimate_class_stats(std::span<const ComplexField> absent, std::span<const ComplexField> present,
                                const Roi& roi, ObserverInput input = ObserverInput::Magnitude);

struct AdmmConfig {
    double rho = 0.0;  // 0: largest eigenvalue of C^T C
    int max_iters = 20000;
    double tol = 1e-9;
    bool record_objective = false;
};

struct ObserverTemplate {
    Vector w;
    double lambda_r = 0.0;
    double rho = 0.0;
    int iterations = 0;
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    bool converged = false;
    std::vector<double> objective_trace;  // f(z_k) after each iteration, when recorded
};

/// ||C w - b||^2 + lambda ||w||_1
double lasso_objective(const Matrix& c, const Vector& b, const Vector& w, double lambda);

/// ADMM on the objective above. The returned w is the sparse iterate z.
ObserverTemplate solve_lasso_admm(const Matrix& c, const Vector& b, double lambda, const AdmmConfig& cfg = {});

/// Regularized Hotelling template: argmin ||C w - (g1 - g0)||^2 + lambda_r ||w||_1.
ObserverTemplate solve_template(const ClassStats& stats, double lambda_r = 1e-4, const AdmmConfig& cfg = {});

double test_statistic(const ObserverTemplate& t, const Vector& g);
double test_statistic(const ObserverTemplate& t, const ComplexField& image, const Roi& roi,
                      ObserverInput input = ObserverInput::Magnitude);

struct RocPoint {
    double fpr;
    double tpr;
};

struct RocCurve {
    std::vector<RocPoint> points;  // (0,0) to (1,1), both coordinates non-decreasing
    double auc = 0.0;
    std::vector<double> fold_aucs;
    double mean_auc = 0.0;
    double std_auc = 0.0;  // sample standard deviation over folds
};

/// Mann-Whitney AUC, ties counted one half; curve from a descending threshold sweep.
RocCurve roc_auc(std::span<const double> present, std::span<const double> absent);

double trapezoid_area(const std::vector<RocPoint>& points);

struct FoldSummary {
    double mean;
    double std;
};
FoldSummary summarize_folds(std::span<const double> aucs);

struct BootstrapConfig {
    std::size_t groups = 8;
    double lambda_r = 1e-4;
    AdmmConfig admm{};
    std::size_t workers = 0;
};

/// Rows are ROI vectors; row i of each class belongs to group i * G / n.
/// Each fold trains on G - 1 groups and scores the held-out one. The curve
/// and `auc` pool the held-out scores of every fold.
RocCurve bootstrap_auc(const Matrix& absent, const Matrix& present, const BootstrapConfig& cfg = {});

struct TTestResult {
    double t = 0.0;
    double p = 1.0;
    double mean_difference = 0.0;
    std::size_t dof = 0;
    bool degenerate = false;
};

/// Two-sided paired t-test on a - b.
TTestResult paired_ttest(std::span<const double> a, std::span<const double> b);

void write_fold_csv(const std::filesystem::path& path, std::span<const double> aucs);
void write_roc_csv(const std::filesystem::path& path, const RocCurve& curve);

}  // namespace mrdl::observer

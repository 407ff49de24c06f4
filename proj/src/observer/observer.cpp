#include "mrdl/observer/observer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include <boost/math/distributions/students_t.hpp>

#include "mrdl/core/parallel.hpp"

namespace mrdl::observer {

const char* to_string(ObserverInput v) { return v == ObserverInput::Magnitude ? "magnitude" : "real"; }

ObserverInput observer_input_from_string(std::string_view s) {
    if (s == "magnitude") return ObserverInput::Magnitude;
    if (s == "real") return ObserverInput::Real;
    throw ParameterError("unknown observer input '" + std::string(s) + "'");
}

Vector roi_vector(const ComplexField& field, const Roi& roi, ObserverInput input) {
    if (!roi.fits(field.dims())) throw DimensionError("observer roi outside field bounds");
    Vector v(static_cast<Eigen::Index>(roi.count()));
    Eigen::Index k = 0;
    for (std::size_t y = 0; y < roi.height; ++y)
        for (std::size_t x = 0; x < roi.width; ++x) {
            const Complex c = field.at(roi.x0 + x, roi.y0 + y);
            v[k++] = input == ObserverInput::Magnitude ? std::abs(c) : c.real();
        }
    return v;
}

Moments Moments::of(const Matrix& samples) {
    Moments m;
    m.n = static_cast<std::size_t>(samples.rows());
    if (m.n == 0) throw StatisticsError("no samples");
    m.mean = samples.colwise().mean().transpose();
    const Matrix centered = samples.rowwise() - m.mean.transpose();
    m.scatter = centered.transpose() * centered;
    return m;
}

Moments& Moments::merge(const Moments& other) {
    if (other.n == 0) return *this;
    if (n == 0) return *this = other;
    if (other.mean.size() != mean.size()) throw DimensionError("moment dimensions differ");
    const double na = static_cast<double>(n), nb = static_cast<double>(other.n), nt = na + nb;
    const Vector delta = other.mean - mean;
    scatter += other.scatter + (na * nb / nt) * (delta * delta.transpose());
    mean += (nb / nt) * delta;
    n += other.n;
    return *this;
}

ClassStats pooled_stats(const Moments& absent, const Moments& present, const Roi& roi) {
    if (absent.n < 2 || present.n < 2) throw StatisticsError("each class needs at least 2 samples");
    if (absent.mean.size() != present.mean.size()) throw DimensionError("class dimensions differ");
    ClassStats s;
    s.mean_absent = absent.mean;
    s.mean_present = present.mean;
    s.covariance = (absent.scatter + present.scatter) / static_cast<double>(absent.n + present.n - 2);
    s.covariance = 0.5 * (s.covariance + s.covariance.transpose()).eval();
    s.n_absent = absent.n;
    s.n_present = present.n;
    s.roi = roi;
    return s;
}

namespace {

Matrix stack(std::span<const ComplexField> fields, const Roi& roi, ObserverInput input) {
    Matrix m(static_cast<Eigen::Index>(fields.size()), static_cast<Eigen::Index>(roi.count()));
    for (std::size_t i = 0; i < fields.size(); ++i)
        m.row(static_cast<Eigen::Index>(i)) = roi_vector(fields[i], roi, input).transpose();
    return m;
}

Vector soft_threshold(const Vector& v, double k) {
    return v.unaryExpr([k](double x) { return x > k ? x - k : (x < -k ? x + k : 0.0); });
}

}  // namespace

ClassStats estimate_class_stats(std::span<const ComplexField> absent, std::span<const ComplexField> present,
                                const Roi& roi, ObserverInput input) {
    if (absent.size() < 2 || present.size() < 2) throw StatisticsError("each class needs at least 2 samples");
    return pooled_stats(Moments::of(stack(absent, roi, input)), Moments::of(stack(present, roi, input)), roi);
}

double lasso_objective(const Matrix& c, const Vector& b, const Vector& w, double lambda) {
    return (c * w - b).squaredNorm() + lambda * w.lpNorm<1>();
}

ObserverTemplate solve_lasso_admm(const Matrix& c, const Vector& b, double lambda, const AdmmConfig& cfg) {
    if (c.rows() != b.size()) throw DimensionError("design matrix and target sizes differ");
    if (!(lambda >= 0.0)) throw ParameterError("lambda_r must be non-negative");
    if (cfg.rho < 0.0) throw ParameterError("rho must be positive");
    if (cfg.max_iters < 1) throw ParameterError("max_iters must be at least 1");

    const Eigen::Index n = c.cols();
    const Matrix ctc = c.transpose() * c;
    const Vector ctb = c.transpose() * b;
    double rho = cfg.rho;
    if (rho == 0.0 && n > 0) {
        // Below the largest eigenvalue of C^T C the objective can rise between
        // iterations; at or above it no increase has been observed.
        rho = Eigen::SelfAdjointEigenSolver<Matrix>(ctc, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
    }
    if (!(rho > 0.0)) rho = 1.0;
    Matrix system = ctc;
    system.diagonal().array() += rho;
    const Eigen::LLT<Matrix> llt(system);
    if (llt.info() != Eigen::Success) throw StatisticsError("ADMM system factorization failed");

    ObserverTemplate t;
    t.lambda_r = lambda;
    t.rho = rho;
    Vector w = Vector::Zero(n), z = Vector::Zero(n), u = Vector::Zero(n);
    const double kappa = lambda / (2.0 * rho);
    const double sqrt_n = std::sqrt(static_cast<double>(n));
    for (int it = 1; it <= cfg.max_iters; ++it) {
        w = llt.solve(ctb + rho * (z - u));
        const Vector z_prev = z;
        z = soft_threshold(w + u, kappa);
        u += w - z;
        t.iterations = it;
        t.primal_residual = (w - z).norm();
        t.dual_residual = rho * (z - z_prev).norm();
        if (cfg.record_objective) t.objective_trace.push_back(lasso_objective(c, b, z, lambda));
        const double eps_pri = cfg.tol * sqrt_n + cfg.tol * std::max(w.norm(), z.norm());
        const double eps_dual = cfg.tol * sqrt_n + cfg.tol * rho * u.norm();
        if (t.primal_residual <= eps_pri && t.dual_residual <= eps_dual) {
            t.converged = true;
            break;
        }
    }
    t.w = std::move(z);
    return t;
}

ObserverTemplate solve_template(const ClassStats& stats, double lambda_r, const AdmmConfig& cfg) {
    return solve_lasso_admm(stats.covariance, stats.difference(), lambda_r, cfg);
}

double test_statistic(const ObserverTemplate& t, const Vector& g) {
    if (g.size() != t.w.size()) throw DimensionError("template and image dimensions differ");
    return t.w.dot(g);
}

double test_statistic(const ObserverTemplate& t, const ComplexField& image, const Roi& roi, ObserverInput input) {
    return test_statistic(t, roi_vector(image, roi, input));
}

RocCurve roc_auc(std::span<const double> present, std::span<const double> absent) {
    if (present.empty() || absent.empty()) throw StatisticsError("ROC needs scores from both classes");
    struct Score {
        double value;
        bool positive;
    };
    std::vector<Score> all;
    all.reserve(present.size() + absent.size());
    for (double v : present) all.push_back({v, true});
    for (double v : absent) all.push_back({v, false});
    for (const auto& s : all)
        if (!std::isfinite(s.value)) throw StatisticsError("non-finite test statistic");
    std::sort(all.begin(), all.end(), [](const Score& a, const Score& b) { return a.value > b.value; });

    const double np = static_cast<double>(present.size()), na = static_cast<double>(absent.size());
    RocCurve roc;
    roc.points.push_back({0.0, 0.0});
    std::size_t tp = 0, fp = 0;
    double u = 0.0;  // Mann-Whitney count of (present > absent) pairs, ties one half
    for (std::size_t i = 0; i < all.size();) {
        std::size_t j = i, tie_tp = 0, tie_fp = 0;
        for (; j < all.size() && all[j].value == all[i].value; ++j) (all[j].positive ? tie_tp : tie_fp)++;
        u += static_cast<double>(tie_fp) * (static_cast<double>(tp) + 0.5 * static_cast<double>(tie_tp));
        tp += tie_tp;
        fp += tie_fp;
        roc.points.push_back({static_cast<double>(fp) / na, static_cast<double>(tp) / np});
        i = j;
    }
    roc.auc = u / (np * na);
    roc.fold_aucs = {roc.auc};
    roc.mean_auc = roc.auc;
    return roc;
}

double trapezoid_area(const std::vector<RocPoint>& points) {
    double a = 0.0;
    for (std::size_t i = 1; i < points.size(); ++i)
        a += (points[i].fpr - points[i - 1].fpr) * 0.5 * (points[i].tpr + points[i - 1].tpr);
    return a;
}

FoldSummary summarize_folds(std::span<const double> aucs) {
    if (aucs.empty()) throw StatisticsError("no folds");
    const double n = static_cast<double>(aucs.size());
    const double mean = std::accumulate(aucs.begin(), aucs.end(), 0.0) / n;
    double ss = 0.0;
    for (double a : aucs) ss += (a - mean) * (a - mean);
    return {mean, aucs.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0};
}

RocCurve bootstrap_auc(const Matrix& absent, const Matrix& present, const BootstrapConfig& cfg) {
    const std::size_t g = cfg.groups;
    if (g < 2) throw ParameterError("bootstrap needs at least 2 groups");
    if (absent.cols() != present.cols()) throw DimensionError("class dimensions differ");
    const auto n0 = static_cast<std::size_t>(absent.rows()), n1 = static_cast<std::size_t>(present.rows());
    if (n0 < 2 * g || n1 < 2 * g) throw StatisticsError("bootstrap groups need at least 2 samples per class");

    auto bounds = [g](std::size_t n, std::size_t k) {
        return std::pair{static_cast<Eigen::Index>(k * n / g), static_cast<Eigen::Index>((k + 1) * n / g)};
    };
    auto rows = [&](const Matrix& m, std::size_t k) {
        const auto [a, b] = bounds(static_cast<std::size_t>(m.rows()), k);
        return m.middleRows(a, b - a);
    };

    std::vector<Moments> m0(g), m1(g);
    parallel_for(g, cfg.workers, [&](std::size_t k) {
        m0[k] = Moments::of(rows(absent, k));
        m1[k] = Moments::of(rows(present, k));
    });

    std::vector<std::vector<double>> s0(g), s1(g);
    std::vector<double> aucs(g);
    parallel_for(g, cfg.workers, [&](std::size_t k) {
        Moments a, p;
        for (std::size_t j = 0; j < g; ++j) {
            if (j == k) continue;
            a.merge(m0[j]);
            p.merge(m1[j]);
        }
        const auto tmpl = solve_template(pooled_stats(a, p, Roi{}), cfg.lambda_r, cfg.admm);
        const Vector v0 = rows(absent, k) * tmpl.w;
        const Vector v1 = rows(present, k) * tmpl.w;
        s0[k].assign(v0.data(), v0.data() + v0.size());
        s1[k].assign(v1.data(), v1.data() + v1.size());
        aucs[k] = roc_auc(s1[k], s0[k]).auc;
    });

    std::vector<double> all0, all1;
    for (std::size_t k = 0; k < g; ++k) {
        all0.insert(all0.end(), s0[k].begin(), s0[k].end());
        all1.insert(all1.end(), s1[k].begin(), s1[k].end());
    }
    RocCurve roc = roc_auc(all1, all0);
    roc.fold_aucs = aucs;
    const auto summary = summarize_folds(aucs);
    roc.mean_auc = summary.mean;
    roc.std_auc = summary.std;
    return roc;
}

TTestResult paired_ttest(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw StatisticsError("paired samples must have equal length");
    if (a.size() < 2) throw StatisticsError("paired t-test needs at least 2 pairs");
    std::vector<double> d(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
    const auto [mean, sd] = summarize_folds(d);
    TTestResult r;
    r.mean_difference = mean;
    r.dof = d.size() - 1;
    if (sd == 0.0) {
        r.degenerate = true;
        r.t = mean == 0.0 ? 0.0 : std::copysign(INFINITY, mean);
        r.p = mean == 0.0 ? 1.0 : 0.0;
        return r;
    }
    r.t = mean / (sd / std::sqrt(static_cast<double>(d.size())));
    const boost::math::students_t dist(static_cast<double>(r.dof));
    r.p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(r.t)));
    return r;
}

void write_fold_csv(const std::filesystem::path& path, std::span<const double> aucs) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path.string());
    out << "fold,auc\n";
    char buf[64];
    for (std::size_t i = 0; i < aucs.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%zu,%.9f\n", i, aucs[i]);
        out << buf;
    }
}

void write_roc_csv(const std::filesystem::path& path, const RocCurve& curve) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path.string());
    out << "fpr,tpr\n";
    char buf[64];
    for (const auto& p : curve.points) {
        std::snprintf(buf, sizeof buf, "%.9f,%.9f\n", p.fpr, p.tpr);
        out << buf;
    }
}

}  // namespace mrdl::observer

#include "mrdl/model/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include "mrdl/core/fft.hpp"
#include "mrdl/core/kspace.hpp"
#include "mrdl/core/noise.hpp"
#include "mrdl/core/rng.hpp"

namespace mrdl::model {

namespace {

std::size_t kept_samples(std::size_t n, double fraction) {
    return std::clamp<std::size_t>(static_cast<std::size_t>(std::lround(fraction * static_cast<double>(n))), 1, n);
}

ComplexField rebuild_input(const ComplexField& clean, const ComplexField& ring, const ComplexField& noise) {
    ComplexField input = clean;
    input += ring;
    input += noise;
    return input;
}

// Geometric transforms act on every field identically.
ComplexField rotate90(const ComplexField& f) {
    // (x, y) -> (h - 1 - y, x): quarter turn counter-clockwise on screen.
    ComplexField out({f.height(), f.width()}, f.domain());
    for (std::size_t y = 0; y < f.height(); ++y)
        for (std::size_t x = 0; x < f.width(); ++x) out.at(f.height() - 1 - y, x) = f.at(x, y);
    return out;
}

ComplexField flip(const ComplexField& f, bool horizontal) {
    ComplexField out(f.dims(), f.domain());
    for (std::size_t y = 0; y < f.height(); ++y)
        for (std::size_t x = 0; x < f.width(); ++x)
            out.at(x, y) = horizontal ? f.at(f.width() - 1 - x, y) : f.at(x, f.height() - 1 - y);
    return out;
}

double unit_coord(std::size_t i, std::size_t n) {
    return n > 1 ? 2.0 * static_cast<double>(i) / static_cast<double>(n - 1) - 1.0 : 0.0;
}

template <class Fn>
ComplexField pointwise(const ComplexField& f, Fn&& factor) {
    ComplexField out = f;
    for (std::size_t y = 0; y < f.height(); ++y)
        for (std::size_t x = 0; x < f.width(); ++x)
            out.at(x, y) *= factor(unit_coord(x, f.width()), unit_coord(y, f.height()));
    return out;
}

// Star-shaped polygon test via ray casting.
bool inside_polygon(const std::vector<std::pair<double, double>>& poly, double px, double py) {
    bool inside = false;
    for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
        const auto [xi, yi] = poly[i];
        const auto [xj, yj] = poly[j];
        if ((yi > py) != (yj > py) && px < (xj - xi) * (py - yi) / (yj - yi) + xi) inside = !inside;
    }
    return inside;
}

}  // namespace

TrainSample synthesize_training_pair(const ComplexField& clean, double trunc_fraction, double noise_sigma,
                                     std::uint64_t seed) {
    clean.require_domain(Domain::Image, "synthesize_training_pair");
    if (!(trunc_fraction > 0.0 && trunc_fraction <= 1.0))
        throw ParameterError("trunc_fraction must lie in (0, 1]");
    if (!(noise_sigma >= 0.0)) throw ParameterError("noise_sigma must be >= 0");

    const Dims full = clean.dims();
    const std::size_t kw = kept_samples(full.width, trunc_fraction);
    const std::size_t kh = kept_samples(full.height, trunc_fraction);
    const bool truncated = kw != full.width || kh != full.height;

    ComplexField degraded = clean;
    if (truncated) degraded = inverse_fft(zero_fill(truncate_kspace(forward_fft(clean), kw, kh), full.width, full.height));

    ComplexField noise(full, Domain::Image);
    if (noise_sigma > 0.0) {
        // Noise lives on the acquired samples only; scale so the zero-filled
        // image has per-component std noise_sigma.
        const double k_sigma =
            noise_sigma * std::sqrt(static_cast<double>(full.count()) / static_cast<double>(kw * kh));
        const auto k_noise = complex_gaussian_noise({kw, kh}, Domain::KSpace, {k_sigma, seed});
        noise = inverse_fft(zero_fill(k_noise, full.width, full.height));
    }

    TrainSample s;
    s.clean = clean;
    s.target_ring = degraded - clean;
    s.target_noise = std::move(noise);
    s.input = rebuild_input(s.clean, s.target_ring, s.target_noise);
    s.provenance = {trunc_fraction, noise_sigma, seed, {}};
    return s;
}

AugmentOp augment_op_from_string(const std::string& name) {
    if (name == "rot90") return AugmentOp::Rot90;
    if (name == "flip_h") return AugmentOp::FlipH;
    if (name == "flip_v") return AugmentOp::FlipV;
    if (name == "intensity_ramp") return AugmentOp::IntensityRamp;
    if (name == "phase_ramp") return AugmentOp::PhaseRamp;
    if (name == "extra_noise") return AugmentOp::ExtraNoise;
    throw ConfigError("unknown augmentation '" + name + "'");
}

std::string to_string(AugmentOp op) {
    switch (op) {
        case AugmentOp::Rot90: return "rot90";
        case AugmentOp::FlipH: return "flip_h";
        case AugmentOp::FlipV: return "flip_v";
        case AugmentOp::IntensityRamp: return "intensity_ramp";
        case AugmentOp::PhaseRamp: return "phase_ramp";
        case AugmentOp::ExtraNoise: return "extra_noise";
    }
    return "?";
}

TrainSample augment(const TrainSample& sample, const std::vector<AugmentStep>& steps, std::uint64_t seed) {
    TrainSample s = sample;
    std::uint64_t index = 0;
    for (const auto& st : steps) {
        auto each = [&](auto&& fn) {
            s.clean = fn(s.clean);
            s.target_ring = fn(s.target_ring);
            s.target_noise = fn(s.target_noise);
        };
        switch (st.op) {
            case AugmentOp::Rot90: {
                const int turns = ((st.quarter_turns % 4) + 4) % 4;
                for (int t = 0; t < turns; ++t) each(rotate90);
                break;
            }
            case AugmentOp::FlipH: each([](const ComplexField& f) { return flip(f, true); }); break;
            case AugmentOp::FlipV: each([](const ComplexField& f) { return flip(f, false); }); break;
            case AugmentOp::IntensityRamp:
                each([&](const ComplexField& f) {
                    return pointwise(f, [&](double u, double v) { return Complex(1.0 + st.ramp_x * u + st.ramp_y * v); });
                });
                break;
            case AugmentOp::PhaseRamp:
                each([&](const ComplexField& f) {
                    return pointwise(f, [&](double u, double v) {
                        return std::polar(1.0, st.phase0 + st.phase_x * u + st.phase_y * v);
                    });
                });
                break;
            case AugmentOp::ExtraNoise:
                if (!(st.extra_sigma >= 0.0)) throw ParameterError("extra noise sigma must be >= 0");
                s.target_noise = add_complex_gaussian_noise(
                    s.target_noise, {st.extra_sigma, derive_seed(seed, {0xE7ull, index})});
                break;
        }
        s.provenance.augmentations.push_back(to_string(st.op));
        ++index;
    }
    s.input = rebuild_input(s.clean, s.target_ring, s.target_noise);
    return s;
}

std::vector<AugmentStep> random_augmentations(const std::vector<std::string>& ops, std::uint64_t seed,
                                              double max_extra_sigma) {
    Rng rng(seed);
    std::vector<AugmentStep> steps;
    for (const auto& name : ops) {
        AugmentStep st{augment_op_from_string(name)};
        switch (st.op) {
            case AugmentOp::Rot90: st.quarter_turns = static_cast<int>(rng.below(4)); break;
            case AugmentOp::FlipH:
            case AugmentOp::FlipV:
                if (rng.uniform() < 0.5) continue;
                break;
            case AugmentOp::IntensityRamp:
                st.ramp_x = rng.uniform(-0.4, 0.4);
                st.ramp_y = rng.uniform(-0.4, 0.4);
                break;
            case AugmentOp::PhaseRamp:
                st.phase0 = rng.uniform(-std::numbers::pi, std::numbers::pi);
                st.phase_x = rng.uniform(-1.5, 1.5);
                st.phase_y = rng.uniform(-1.5, 1.5);
                break;
            case AugmentOp::ExtraNoise: st.extra_sigma = rng.uniform(0.0, max_extra_sigma); break;
        }
        steps.push_back(st);
    }
    return steps;
}

ComplexField random_clean_image(Dims dims, std::uint64_t seed) {
    Rng rng(seed);
    const double w = static_cast<double>(dims.width), h = static_cast<double>(dims.height);
    std::vector<double> img(dims.count(), 0.0);
    auto for_each_pixel = [&](auto&& fn) {
        for (std::size_t y = 0; y < dims.height; ++y)
            for (std::size_t x = 0; x < dims.width; ++x) fn(x, y, img[y * dims.width + x]);
    };

    if (rng.uniform() < 0.7) {
        const double level = rng.uniform(0.0, 0.5);
        for (auto& v : img) v = level;
    }
    if (rng.uniform() < 0.4) {  // linear ramp
        const double gx = rng.uniform(-0.5, 0.5), gy = rng.uniform(-0.5, 0.5);
        for_each_pixel([&](std::size_t x, std::size_t y, double& v) { v += 0.25 + gx * x / w + gy * y / h; });
    }
    const auto blobs = rng.below(4);
    for (std::uint64_t b = 0; b < blobs; ++b) {  // smooth Gaussian blobs
        const double cx = rng.uniform(0, w), cy = rng.uniform(0, h);
        const double s = rng.uniform(2.0, w / 3.0), a = rng.uniform(-0.3, 0.8);
        for_each_pixel([&](std::size_t x, std::size_t y, double& v) {
            const double dx = x - cx, dy = y - cy;
            v += a * std::exp(-(dx * dx + dy * dy) / (2 * s * s));
        });
    }
    const auto shapes = rng.below(7);
    for (std::uint64_t p = 0; p < shapes; ++p) {  // hard-edged polygons and disks
        const double cx = rng.uniform(0, w), cy = rng.uniform(0, h);
        const double r = rng.uniform(1.0, w / 3.0);
        const double a = rng.uniform(0.1, 1.0);
        const bool replace = rng.uniform() < 0.5;
        if (rng.uniform() < 0.4) {
            for_each_pixel([&](std::size_t x, std::size_t y, double& v) {
                const double dx = x - cx, dy = y - cy;
                if (dx * dx + dy * dy <= r * r) v = replace ? a : v + a;
            });
        } else {
            const auto n = 3 + rng.below(5);
            std::vector<double> angles(n);
            for (auto& t : angles) t = rng.uniform(0, 2 * std::numbers::pi);
            std::sort(angles.begin(), angles.end());
            std::vector<std::pair<double, double>> poly;
            for (double t : angles) {
                const double rr = r * rng.uniform(0.4, 1.0);
                poly.emplace_back(cx + rr * std::cos(t), cy + rr * std::sin(t));
            }
            for_each_pixel([&](std::size_t x, std::size_t y, double& v) {
                if (inside_polygon(poly, double(x), double(y))) v = replace ? a : v + a;
            });
        }
    }
    ComplexField out(dims, Domain::Image);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = img[i];
    if (rng.uniform() < 0.3) {  // band-limited texture
        const double amp = rng.uniform(0.02, 0.15);
        auto tex = complex_gaussian_noise(dims, Domain::Image, {1.0, rng.next_u64()});
        const std::size_t kw = std::max<std::size_t>(2, dims.width / 6), kh = std::max<std::size_t>(2, dims.height / 6);
        tex = inverse_fft(zero_fill(truncate_kspace(forward_fft(tex), kw, kh), dims.width, dims.height));
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += amp * tex[i].real() * 3.0;
    }
    return out;
}

SyntheticCorpus::SyntheticCorpus(CorpusConfig cfg, std::uint64_t seed) : cfg_(std::move(cfg)), seed_(seed) {
    if (!(cfg_.min_trunc > 0.0 && cfg_.min_trunc <= cfg_.max_trunc && cfg_.max_trunc <= 1.0))
        throw ConfigError("corpus truncation range must satisfy 0 < min <= max <= 1");
    if (!(cfg_.min_noise >= 0.0 && cfg_.min_noise <= cfg_.max_noise))
        throw ConfigError("corpus noise range must satisfy 0 <= min <= max");
    for (const auto& op : cfg_.augmentations) augment_op_from_string(op);
}

TrainSample SyntheticCorpus::sample(std::uint64_t index) const {
    const std::uint64_t s = derive_seed(seed_, {index});
    Rng rng(s);
    const std::size_t canvas = cfg_.patch + 2 * cfg_.margin;
    const auto clean = random_clean_image({canvas, canvas}, rng.next_u64());
    double peak = 0.0;
    for (const auto& c : clean.samples()) peak = std::max(peak, std::abs(c));
    if (peak == 0.0) peak = 1.0;

    const double trunc = rng.uniform() < cfg_.full_resolution_share ? 1.0 : rng.uniform(cfg_.min_trunc, cfg_.max_trunc);
    const double rel_noise = cfg_.min_noise > 0.0
                                 ? std::exp(rng.uniform(std::log(cfg_.min_noise), std::log(cfg_.max_noise)))
                                 : rng.uniform(cfg_.min_noise, cfg_.max_noise);
    const double sigma = rel_noise * peak;
    auto sample = synthesize_training_pair(clean, trunc, sigma, rng.next_u64());
    if (cfg_.margin > 0) {
        const Roi inner{cfg_.margin, cfg_.margin, cfg_.patch, cfg_.patch};
        sample.clean = crop(sample.clean, inner);
        sample.target_ring = crop(sample.target_ring, inner);
        sample.target_noise = crop(sample.target_noise, inner);
        sample.input = crop(sample.input, inner);
    }
    if (!cfg_.augmentations.empty() && rng.uniform() < cfg_.augment_probability) {
        const auto steps = random_augmentations(cfg_.augmentations, rng.next_u64(), 0.5 * sigma);
        sample = augment(sample, steps, rng.next_u64());
    }
    return sample;
}

AdamOptimizer::AdamOptimizer(const DenoiseModel& model, AdamConfig cfg) : cfg_(cfg) {
    for (const auto& w : model.weights()) {
        m_.push_back(Matrix<float>::Zero(w.rows(), w.cols()));
        v_.push_back(Matrix<float>::Zero(w.rows(), w.cols()));
    }
}

void AdamOptimizer::step(DenoiseModel& model, const std::vector<Matrix<float>>& grads) {
    ++t_;
    const auto b1 = static_cast<float>(cfg_.beta1), b2 = static_cast<float>(cfg_.beta2);
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    const auto step_size = static_cast<float>(cfg_.learning_rate / bc1);
    const auto inv_sqrt_bc2 = static_cast<float>(1.0 / std::sqrt(bc2));
    const auto eps = static_cast<float>(cfg_.epsilon);
    for (std::size_t l = 0; l < grads.size(); ++l) {
        m_[l] = b1 * m_[l] + (1.0f - b1) * grads[l];
        v_[l] = b2 * v_[l] + (1.0f - b2) * grads[l].cwiseProduct(grads[l]);
        model.weights()[l].array() -=
            step_size * m_[l].array() / ((v_[l].array().sqrt() * inv_sqrt_bc2) + eps);
    }
}

TrainSample scale_normalized(const TrainSample& s) {
    const double rms = std::sqrt(s.input.energy() / static_cast<double>(s.input.size()));
    if (!(rms > 0.0) || !std::isfinite(rms)) return s;
    const double k = 1.0 / rms;
    TrainSample out{k * s.clean, {}, k * s.target_ring, k * s.target_noise, s.provenance};
    out.input = out.clean;
    out.input += out.target_ring;
    out.input += out.target_noise;
    return out;
}

TrainResult train(DenoiseModel model, const SampleSource& source, const TrainConfig& cfg,
                  const std::function<void(const LossPoint&)>& on_step) {
    if (cfg.batch_size == 0) throw ConfigError("batch size must be positive");
    if (!(cfg.adam.learning_rate >= 0.0)) throw ConfigError("learning rate must be >= 0");
    AdamOptimizer adam(model, cfg.adam);
    TrainResult result;
    result.loss_trace.reserve(cfg.iterations);
    std::vector<Matrix<float>> batch_grads, grads;
    for (std::size_t step = 0; step < cfg.iterations; ++step) {
        double loss = 0.0;
        for (std::size_t b = 0; b < cfg.batch_size; ++b) {
            auto sample = source(step * cfg.batch_size + b);
            if (cfg.normalize_scale) sample = scale_normalized(sample);
            loss += loss_and_gradient(model, sample, &grads);
            if (b == 0) {
                batch_grads = std::move(grads);
            } else {
                for (std::size_t l = 0; l < grads.size(); ++l) batch_grads[l] += grads[l];
            }
        }
        loss /= static_cast<double>(cfg.batch_size);
        if (!std::isfinite(loss))
            throw TrainingDiverged(static_cast<long>(step), "training diverged at step " + std::to_string(step));
        for (auto& g : batch_grads) g /= static_cast<float>(cfg.batch_size);
        adam.step(model, batch_grads);
        result.loss_trace.push_back({step, loss});
        if (on_step) on_step(result.loss_trace.back());
    }
    result.model = std::move(model);
    return result;
}

void write_loss_trace(const std::filesystem::path& path, const std::vector<LossPoint>& trace) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path.string());
    out << "step,loss\n";
    char buf[64];
    for (const auto& p : trace) {
        std::snprintf(buf, sizeof(buf), "%zu,%.9g\n", p.step, p.loss);
        out << buf;
    }
}

}  // namespace mrdl::model

#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "mrdl/core/error.hpp"

namespace mrdl {

using Complex = std::complex<double>;

enum class Domain { Image, KSpace };

std::string_view to_string(Domain d);
Domain domain_from_string(std::string_view s);

struct Dims {
    std::size_t width = 0;
    std::size_t height = 0;

    std::size_t count() const noexcept { return width * height; }
    friend bool operator==(const Dims&, const Dims&) = default;
};

/// Axis-aligned pixel rectangle, half-open on the far edges.
struct Roi {
    std::size_t x0 = 0;
    std::size_t y0 = 0;
    std::size_t width = 0;
    std::size_t height = 0;

    std::size_t count() const noexcept { return width * height; }
    bool fits(Dims d) const noexcept {
        return width > 0 && height > 0 && x0 + width <= d.width && y0 + height <= d.height;
    }
    /// A w x h rectangle centered on the floor(N/2) pixel of `d`.
    static Roi centered(Dims d, std::size_t w, std::size_t h);
    friend bool operator==(const Roi&, const Roi&) = default;
};

/// Row-major 2D complex array tagged with the domain it lives in.
/// K-space data is stored DC-centered: the zero frequency sits at
/// (floor(width/2), floor(height/2)).
class ComplexField {
public:
    ComplexField() = default;
    ComplexField(Dims dims, Domain domain);
    ComplexField(Dims dims, Domain domain, std::vector<Complex> samples);

    static ComplexField zeros(Dims dims, Domain domain) { return {dims, domain}; }

    Dims dims() const noexcept { return dims_; }
    std::size_t width() const noexcept { return dims_.width; }
    std::size_t height() const noexcept { return dims_.height; }
    std::size_t size() const noexcept { return samples_.size(); }
    Domain domain() const noexcept { return domain_; }

    Complex& at(std::size_t x, std::size_t y) { return samples_[y * dims_.width + x]; }
    const Complex& at(std::size_t x, std::size_t y) const { return samples_[y * dims_.width + x]; }
    Complex& operator[](std::size_t i) { return samples_[i]; }
    const Complex& operator[](std::size_t i) const { return samples_[i]; }

    std::span<Complex> samples() noexcept { return samples_; }
    std::span<const Complex> samples() const noexcept { return samples_; }

    /// Throws DomainMismatch unless the field lives in `expected`.
    void require_domain(Domain expected, std::string_view op) const;
    bool all_finite() const noexcept;
    double energy() const noexcept;

    ComplexField& operator+=(const ComplexField& other);
    ComplexField& operator-=(const ComplexField& other);
    ComplexField& operator*=(double s);

    friend ComplexField operator+(ComplexField a, const ComplexField& b) { return a += b; }
    friend ComplexField operator-(ComplexField a, const ComplexField& b) { return a -= b; }
    friend ComplexField operator*(ComplexField a, double s) { return a *= s; }
    friend ComplexField operator*(double s, ComplexField a) { return a *= s; }

    friend bool operator==(const ComplexField&, const ComplexField&) = default;

private:
    void check_same_shape(const ComplexField& other, std::string_view op) const;

    Dims dims_{};
    Domain domain_ = Domain::Image;
    std::vector<Complex> samples_;
};

/// Real-valued image, used for magnitude views and measurement inputs.
class RealImage {
public:
    RealImage() = default;
    explicit RealImage(Dims dims, double fill = 0.0);
    RealImage(Dims dims, std::vector<double> values);

    Dims dims() const noexcept { return dims_; }
    std::size_t width() const noexcept { return dims_.width; }
    std::size_t height() const noexcept { return dims_.height; }
    std::size_t size() const noexcept { return values_.size(); }

    double& at(std::size_t x, std::size_t y) { return values_[y * dims_.width + x]; }
    double at(std::size_t x, std::size_t y) const { return values_[y * dims_.width + x]; }
    double& operator[](std::size_t i) { return values_[i]; }
    double operator[](std::size_t i) const { return values_[i]; }

    std::span<double> values() noexcept { return values_; }
    std::span<const double> values() const noexcept { return values_; }

    /// Values inside `roi`, row-major.
    std::vector<double> extract(const Roi& roi) const;

    friend bool operator==(const RealImage&, const RealImage&) = default;

private:
    Dims dims_{};
    std::vector<double> values_;
};

/// Copy of the samples inside `roi`; keeps the domain.
ComplexField crop(const ComplexField& field, const Roi& roi);

RealImage magnitude(const ComplexField& field);
RealImage real_part(const ComplexField& field);
ComplexField to_complex(const RealImage& image, Domain domain = Domain::Image);

}  // namespace mrdl

#include "mrdl/core/field.hpp"

#include <cmath>
#include <string>

namespace mrdl {

std::string_view to_string(Domain d) {
    return d == Domain::Image ? "image" : "kspace";
}

Domain domain_from_string(std::string_view s) {
    if (s == "image") return Domain::Image;
    if (s == "kspace") return Domain::KSpace;
    throw ParameterError("unknown domain '" + std::string(s) + "'");
}

Roi Roi::centered(Dims d, std::size_t w, std::size_t h) {
    if (w == 0 || h == 0 || w > d.width || h > d.height)
        throw DimensionError("centered roi does not fit the field");
    return Roi{(d.width - w) / 2, (d.height - h) / 2, w, h};
}

ComplexField::ComplexField(Dims dims, Domain domain)
    : dims_(dims), domain_(domain), samples_(dims.count()) {
    if (dims.width == 0 || dims.height == 0)
        throw DimensionError("field dimensions must be positive");
}

ComplexField::ComplexField(Dims dims, Domain domain, std::vector<Complex> samples)
    : dims_(dims), domain_(domain), samples_(std::move(samples)) {
    if (dims.width == 0 || dims.height == 0)
        throw DimensionError("field dimensions must be positive");
    if (samples_.size() != dims.count())
        throw DimensionError("sample count " + std::to_string(samples_.size()) +
                             " does not match " + std::to_string(dims.width) + "x" +
                             std::to_string(dims.height));
}

void ComplexField::require_domain(Domain expected, std::string_view op) const {
    if (domain_ != expected)
        throw DomainMismatch(std::string(op) + ": expected " + std::string(to_string(expected)) +
                             " field, got " + std::string(to_string(domain_)));
}

bool ComplexField::all_finite() const noexcept {
    for (const auto& c : samples_)
        if (!std::isfinite(c.real()) || !std::isfinite(c.imag())) return false;
    return true;
}

double ComplexField::energy() const noexcept {
    double e = 0.0;
    for (const auto& c : samples_) e += std::norm(c);
    return e;
}

void ComplexField::check_same_shape(const ComplexField& other, std::string_view op) const {
    if (other.dims_ != dims_)
        throw DimensionError(std::string(op) + ": dimension mismatch");
    if (other.domain_ != domain_)
        throw DomainMismatch(std::string(op) + ": domain mismatch");
}

ComplexField& ComplexField::operator+=(const ComplexField& other) {
    check_same_shape(other, "add");
    for (std::size_t i = 0; i < samples_.size(); ++i) samples_[i] += other.samples_[i];
    return *this;
}

ComplexField& ComplexField::operator-=(const ComplexField& other) {
    check_same_shape(other, "subtract");
    for (std::size_t i = 0; i < samples_.size(); ++i) samples_[i] -= other.samples_[i];
    return *this;
}

ComplexField& ComplexField::operator*=(double s) {
    for (auto& c : samples_) c *= s;
    return *this;
}

RealImage::RealImage(Dims dims, double fill) : dims_(dims), values_(dims.count(), fill) {
    if (dims.width == 0 || dims.height == 0)
        throw DimensionError("image dimensions must be positive");
}

RealImage::RealImage(Dims dims, std::vector<double> values)
    : dims_(dims), values_(std::move(values)) {
    if (values_.size() != dims.count()) throw DimensionError("value count does not match dims");
}

std::vector<double> RealImage::extract(const Roi& roi) const {
    if (!roi.fits(dims_)) throw DimensionError("roi outside image bounds");
    std::vector<double> out;
    out.reserve(roi.count());
    for (std::size_t y = roi.y0; y < roi.y0 + roi.height; ++y)
        for (std::size_t x = roi.x0; x < roi.x0 + roi.width; ++x) out.push_back(at(x, y));
    return out;
}

ComplexField crop(const ComplexField& field, const Roi& roi) {
    if (!roi.fits(field.dims())) throw DimensionError("roi outside field bounds");
    ComplexField out({roi.width, roi.height}, field.domain());
    for (std::size_t y = 0; y < roi.height; ++y)
        for (std::size_t x = 0; x < roi.width; ++x) out.at(x, y) = field.at(roi.x0 + x, roi.y0 + y);
    return out;
}

RealImage magnitude(const ComplexField& field) {
    RealImage out(field.dims());
    for (std::size_t i = 0; i < field.size(); ++i) out[i] = std::abs(field[i]);
    return out;
}

RealImage real_part(const ComplexField& field) {
    RealImage out(field.dims());
    for (std::size_t i = 0; i < field.size(); ++i) out[i] = field[i].real();
    return out;
}

ComplexField to_complex(const RealImage& image, Domain domain) {
    ComplexField out(image.dims(), domain);
    for (std::size_t i = 0; i < image.size(); ++i) out[i] = Complex(image[i], 0.0);
    return out;
}

}  // namespace mrdl

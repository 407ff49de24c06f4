#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "mrdl/core/field.hpp"
#include "mrdl/dro/dro.hpp"

namespace mrdl::metrics {

// ---- SNR ----------------------------------------------------------------

struct SnrMeasurement {
    double signal = 0.0;  // ROI mean of the first image
    double sigma = 0.0;   // ROI std of the pairwise difference
    double snr = 0.0;     // signal / (sigma / sqrt 2)
    Roi roi;
    std::size_t averages = 1;
};

/// Pair-difference SNR. S comes from img1 only; sigma is symmetric in the pair.
SnrMeasurement snr_pair(const RealImage& img1, const RealImage& img2, const Roi& roi, std::size_t averages = 1);

struct SnrPoint {
    double averages = 1.0;
    double snr = 0.0;
};

struct SqrtLawFit {
    double alpha = 0.0;
    double rms_residual = 0.0;
};

/// Least squares for snr = alpha * sqrt(n).
SqrtLawFit fit_sqrt_law(std::span<const SnrPoint> points);

struct PowerLawFit {
    double scale = 0.0;
    double exponent = 0.0;
    double r_squared = 0.0;  // of the log-log regression
};

/// Log-log regression of snr = scale * n^exponent; needs two distinct n.
PowerLawFit fit_power_law(std::span<const SnrPoint> points);

double cnr(double amplitude, double noise_std);

/// Rose criterion: CNR of about 5 for reliable detection of a point-like object.
inline constexpr double kRoseThreshold = 5.0;

// ---- Sharpness ----------------------------------------------------------

struct ProfileLine {
    double x0 = 0.0, y0 = 0.0;
    double x1 = 0.0, y1 = 0.0;

    double length() const;
    friend bool operator==(const ProfileLine&, const ProfileLine&) = default;
};

/// Bilinear samples at unit steps from (x0, y0), floor(length) + 1 of them.
std::vector<double> sample_profile(const RealImage& image, const ProfileLine& line);

/// Largest |central difference| after mapping the profile onto [0, 1].
/// Throws DegenerateMeasurement for a flat profile.
double peak_normalized_gradient(std::span<const double> profile);

struct SharpnessResult {
    ProfileLine line;
    double peak_a = 0.0;
    double peak_b = 0.0;
    double ratio = 0.0;  // peak_a / peak_b
};

SharpnessResult edge_sharpness(const RealImage& img_a, const RealImage& img_b, const ProfileLine& line);

struct ResolutionPhantomSpec {
    std::size_t size = 128;
    double level = 1.0;
    double background = 0.0;
    std::vector<std::size_t> bar_widths{1, 2, 3, 4};
    std::size_t profile_half_length = 10;
    void validate() const;
};

struct ResolutionPhantom {
    ComplexField image;
    // Left and right block edges (vertical), then top and bottom (horizontal).
    std::vector<ProfileLine> edge_lines;
    std::vector<Roi> bar_groups;
    Roi flat;  // block interior, clear of the edges
};

/// A bright block with four straight edges plus groups of bars at several widths.
ResolutionPhantom make_resolution_phantom(const ResolutionPhantomSpec& spec = {});

// ---- Detection bookkeeping ---------------------------------------------

struct DetectionResponse {
    std::size_t disk_id = 0;
    std::uint64_t realization = 0;
    bool visible = false;
    friend bool operator==(const DetectionResponse&, const DetectionResponse&) = default;
};

std::vector<DetectionResponse> responses_from_json(const nlohmann::json& j);
nlohmann::json to_json(std::span<const DetectionResponse> responses);
std::vector<DetectionResponse> read_responses(const std::filesystem::path& path);
void write_responses(const std::filesystem::path& path, std::span<const DetectionResponse> responses);

struct DetectionCell {
    int diameter = 0;
    double cnr = 0.0;
    std::size_t trials = 0;
    std::size_t hits = 0;
    double probability() const { return trials ? static_cast<double>(hits) / static_cast<double>(trials) : 0.0; }
};

/// Cells ordered by (cnr level, diameter) as laid out in the grid.
struct DetectionTable {
    std::vector<int> diameters;
    std::vector<double> cnr_levels;
    std::vector<DetectionCell> cells;  // row-major: cnr index, then diameter index

    const DetectionCell& at(std::size_t diameter_index, std::size_t cnr_index) const {
        return cells[cnr_index * diameters.size() + diameter_index];
    }
};

/// Throws ParameterError for a response naming a disk absent from `truth`.
DetectionTable detection_probability(std::span<const DetectionResponse> responses, const dro::GroundTruthMap& truth);

struct DetectionDifference {
    int diameter = 0;
    double cnr = 0.0;
    double p_a = 0.0;
    double p_b = 0.0;
    double difference = 0.0;  // p_a - p_b
};

std::vector<DetectionDifference> difference_table(const DetectionTable& a, const DetectionTable& b);

/// Automated stand-in for a reader. Not a human judgment: each disk is
/// "visible" when its mean exceeds the surrounding annulus by `threshold`
/// standard errors.
std::vector<DetectionResponse> matched_filter_proxy(const RealImage& image, const dro::GroundTruthMap& truth,
                                                    std::uint64_t realization, double threshold = kRoseThreshold);

// ---- Output ------------------------------------------------------------

void write_detection_csv(const std::filesystem::path& path, const DetectionTable& table);
void write_difference_csv(const std::filesystem::path& path, std::span<const DetectionDifference> rows);

struct SnrSeriesRow {
    std::string pipeline;
    double level = 0.0;
    SnrMeasurement m;
};
void write_snr_csv(const std::filesystem::path& path, std::span<const SnrSeriesRow> rows);

}  // namespace mrdl::metrics

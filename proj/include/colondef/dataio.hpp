#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "colondef/estimator.hpp"
#include "colondef/shapes.hpp"

namespace colondef {

inline constexpr int kSequenceFormatVersion = 1;
inline constexpr int kModelFormatVersion = 1;
inline constexpr int kPointsFormatVersion = 1;

/// Shortest decimal text that parses back to exactly `v`.
std::string format_real(double v);
/// Parses a finite real; returns nullopt on anything else.
std::optional<double> parse_real(std::string_view text);

/// A loaded sequence file: the sequence plus the simulator settings echoed
/// in its header (a single-line JSON document), when present.
struct SequenceFile {
    InsertionSequence sequence;
    std::optional<std::string> simulator;
};

/// Writes the line-oriented sequence format (see docs/file-formats.md).
/// Throws InvalidInput if the sequence breaks its invariants, IoError on
/// write failure.
void save_sequence(const std::filesystem::path& path, const InsertionSequence& seq,
                   const std::optional<std::string>& simulator = std::nullopt);
/// Throws ParseError (with line number), UnsupportedVersion or IoError; never
/// returns a partially read sequence.
SequenceFile load_sequence_file(const std::filesystem::path& path);
InsertionSequence load_sequence(const std::filesystem::path& path);

void write_sequence(std::ostream& out, const InsertionSequence& seq,
                    const std::optional<std::string>& simulator = std::nullopt);
SequenceFile read_sequence(std::istream& in);

/// Model format: header, baseline shape, then every forest as a pre-order
/// node list. Throws StructuralIntegrity for node lists that do not form
/// trees, UnsupportedVersion, ParseError or IoError.
void save_model(const std::filesystem::path& path, const ShapeRegressor& model);
ShapeRegressor load_model(const std::filesystem::path& path);
void write_model(std::ostream& out, const ShapeRegressor& model);
ShapeRegressor read_model(std::istream& in);

/// Plain point list file (registration references).
void save_points(const std::filesystem::path& path, std::span<const Point3> pts);
PointList load_points(const std::filesystem::path& path);

enum class EstimateRole { Scope, Estimate, Truth };

struct EstimateFrame {
    ScopeShape scope;
    ColonShape estimate;
    std::optional<ColonShape> truth;
};

struct EstimateRow {
    EstimateRole role;
    std::size_t frame;
    std::size_t point;
    Point3 position;
};

/// CSV with header `role,frame,point,x,y,z`; per frame the scope rows, then
/// the estimate rows, then the truth rows when truth is present.
void export_estimates(const std::filesystem::path& path, std::span<const EstimateFrame> frames);
void write_estimates(std::ostream& out, std::span<const EstimateFrame> frames);
std::vector<EstimateRow> load_estimates(const std::filesystem::path& path);

const char* role_name(EstimateRole role);

}  // namespace colondef

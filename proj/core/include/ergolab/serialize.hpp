// JSON descriptors and reports, CSV series, and the layer-stack sidecar.
//
// Parsers report failures as ErrorCode::schema with a JSON-pointer-like path.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ergolab/averaging.hpp"
#include "ergolab/bfko.hpp"
#include "ergolab/observable.hpp"
#include "ergolab/sets.hpp"
#include "ergolab/spectral.hpp"
#include "ergolab/system.hpp"

namespace ergolab {

using Json = nlohmann::json;

// scalars
Json complex_to_json(Complex z);
Complex complex_from_json(const Json& j, const std::string& path);
Json angle_to_json(const Angle& a);
Angle angle_from_json(const Json& j, const std::string& path);

// descriptors
Json to_json(const MeasurableSet& s);
MeasurableSet set_from_json(const Json& j, const std::string& path = "/set");
Json to_json(const System& sys);
System system_from_json(const Json& j, const std::string& path = "/system");
Json to_json(const Observable& f);
Observable observable_from_json(const Json& j, const std::string& path = "/observable");
Json to_json(const Point& x);

// reports
Json to_json(const ConvergenceReport& r);
/// Columns N, re, im; one row per checkpoint.
std::string series_csv(const ConvergenceReport& r);
Json to_json(const CauchyReport& r);
Json to_json(const EgorovResult& r);
Json to_json(const CoverResult& r);
Json to_json(const PsiResult& r);
Json to_json(const SpectralEstimate& e);
/// Columns lag, re, im.
std::string spectral_csv(const SpectralEstimate& e);
Json to_json(const PairCorrelationResult& r);

// bfko stages
Json to_json(const BadIntervalCertificate& c);
BadIntervalCertificate certificate_from_json(const Json& j, const std::string& path = "/certificate");
Json to_json(const GoodBlockFamily& f);
GoodBlockFamily family_from_json(const Json& j, const std::string& path = "/family");
Json to_json(const LayerConstants& k);
LayerConstants constants_from_json(const Json& j, const std::string& path = "/constants");
/// Intervals, constants and densities; the c-sequences live in the sidecar.
Json to_json(const LayerStack& st);
/// Little-endian: magic "ELCS", u32 version, u32 J, u64 N, u32 width (1 or 4),
/// then J blocks of N + 1 signed symbol ids of that width, then in_b and in_e
/// as N + 1 bytes each.
std::vector<std::uint8_t> stack_sidecar(const LayerStack& st);
LayerStack stack_from_json(const Json& j, const std::vector<std::uint8_t>& sidecar);
Json to_json(const DensityAudit& a);
Json to_json(const AlphaBeta& ab);
Json to_json(const ChainResult& r);

// files
std::string read_text(const std::filesystem::path& p);
void write_text(const std::filesystem::path& p, const std::string& text);
std::vector<std::uint8_t> read_bytes(const std::filesystem::path& p);
void write_bytes(const std::filesystem::path& p, const std::vector<std::uint8_t>& bytes);
Json read_json(const std::filesystem::path& p);
/// Two-space indented, trailing newline.
void write_json(const std::filesystem::path& p, const Json& j);

/// Shortest decimal that reads back to the same double.
std::string format_double(double v);

}  // namespace ergolab

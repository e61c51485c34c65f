#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "tppfit/conditioning.hpp"
#include "tppfit/dataset.hpp"
#include "tppfit/evaluation.hpp"
#include "tppfit/fitter.hpp"
#include "tppfit/planner.hpp"

namespace tppfit {

using Json = nlohmann::ordered_json;

inline constexpr const char* kSchemaVersion = "1.0";

struct CsvColumns {
    bool split = false;
    bool ray = false;
};

struct DatasetFile {
    ExperimentDataset data;
    CsvColumns columns;
};

// Header row `n_params,d_tokens,loss[,split][,ray]`; errors carry 1-based line numbers.
DatasetFile parse_dataset_file(std::istream& in);
ExperimentDataset parse_dataset(std::istream& in);
ExperimentDataset parse_dataset(const std::string& path);

// Optional columns appear when requested or when any row needs them.
void write_dataset(std::ostream& out, const ExperimentDataset& ds, CsvColumns columns = {});

std::string format_double(double x);  // 17 significant digits

// Finite values as numbers; +-inf as "inf"/"-inf"; NaN as "unreliable".
Json json_number(double x);
Json json_numbers(const std::vector<double>& xs);

Json to_json(const LawParams& p);
Json to_json(const FitResult& f);
Json to_json(const FitConfig& c);
Json to_json(const GramDiagnostics& d);
Json to_json(const CIReport& c);
Json to_json(const DiversityReport& r);
Json to_json(const DesignPlan& p);
Json to_json(const HoldoutMetrics& m);
Json to_json(const WinRate& w);
Json to_json(const SweepResult& s);
Json to_json(const MsePrediction& m);

// Report envelope with schema_version and the four standard sections.
Json make_report(const std::string& command, Json config);

// Deterministic pretty-printer; floats at 17 significant digits.
std::string dump_report(const Json& j);

void write_isoflop_csv(std::ostream& out, const std::vector<IsoFlopCurve>& curves);

}  // namespace tppfit

// Copyright 2026-present the ihcq authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ihcq/core.hpp"
#include "ihcq/eval.hpp"
#include "ihcq/instances.hpp"

namespace ihcq::scoring {

/// Keeps the predictions with confidence >= tau, preserving order. Throws
/// InvalidInput when tau is outside [0,1].
std::vector<PredictionInstance> filter_by_confidence(std::span<const PredictionInstance> preds,
                                                     double tau);

/// Suggested tau for a model name: 0.3 for SOLOv2-style predictors, 0.6 for
/// Mask-RCNN-style ones, 0 otherwise (baseline, manual annotations).
double recommended_tau(std::string_view model);

struct NuclearScore {
    std::uint64_t positive = 0;
    std::uint64_t negative = 0;
    double percent_positive = 0.0;

    std::uint64_t total() const { return positive + negative; }
};

/// Throws NoCells for zero cells and InvalidInput for membrane classes.
NuclearScore nuclear_quantify(std::span<const CellClass> cells);
NuclearScore nuclear_from_counts(std::uint64_t positive, std::uint64_t negative);

enum class Her2Category { Zero, OnePlus, TwoPlus, ThreePlus };
enum class Assessment { Negative, Equivocal, Positive };

std::string_view to_string(Her2Category score);
std::string_view to_string(Assessment assessment);

/// Counts indexed m0..m3.
using MembraneCounts = std::array<std::uint64_t, 4>;

/// One row of the HER2 decision table. Rules are mutually exclusive: each
/// predicate already excludes the higher-precedence rows.
struct Her2Rule {
    Her2Category score;
    Assessment assessment;
    std::string_view pattern;
    bool (*applies)(const MembraneCounts& counts, std::uint64_t total);
};

/// Rows in precedence order 3+, 2+, 1+, 0.
std::span<const Her2Rule> her2_rules();

struct Her2Score {
    MembraneCounts counts{};
    std::array<double, 4> percentages{};
    Her2Category score = Her2Category::Zero;
    Assessment assessment = Assessment::Negative;
    /// Some category lies within 0.5 points of the 10% cut-off.
    bool near_boundary = false;

    std::uint64_t total() const { return counts[0] + counts[1] + counts[2] + counts[3]; }
};

Her2Score her2_quantify(std::span<const CellClass> cells);
Her2Score her2_from_counts(const MembraneCounts& counts);

/// Aggregation of several patches: counts add, percentages are recomputed.
NuclearScore merge(std::span<const NuclearScore> parts);
Her2Score merge(std::span<const Her2Score> parts);

struct ThresholdSweep {
    std::vector<double> grid;
    std::vector<double> map50;
    double best_tau = 0.0;
    double best_map = 0.0;
};

/// "start:stop:step" inclusive of stop. Throws InvalidInput on a malformed
/// or empty grid.
std::vector<double> parse_grid(std::string_view spec);

/// mAP@0.50 after filtering at each tau; argmax takes the smallest tau on
/// ties. Throws InvalidInput for a bad grid, EmptyDataset without GT.
ThresholdSweep sweep_threshold(const eval::Evaluator& evaluator, std::span<const double> grid);

/// Score over a set of cells of one stain family, as served by the score
/// endpoint and printed by the CLI.
struct BiomarkerScore {
    StainKind stain = StainKind::Nuclear;
    double tau = 0.0;
    std::string provenance;
    std::size_t cells_before_filter = 0;
    std::optional<NuclearScore> nuclear;
    std::optional<Her2Score> her2;
};

/// A cell to be counted; manual annotations carry no confidence and are
/// never removed by the tau filter.
struct CountedCell {
    CellClass cls;
    std::optional<double> confidence;
};

/// Throws NoCells when nothing survives the filter and InvalidInput when
/// classes mix stain families or disagree with `stain`.
BiomarkerScore score_cells(std::span<const CountedCell> cells, double tau,
                           std::optional<StainKind> stain, std::string provenance);

std::string render_text(const BiomarkerScore& score);

}  // namespace ihcq::scoring

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

#include "ihcq/scoring.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "ihcq/error.hpp"

namespace ihcq::scoring {

namespace {

void check_tau(double tau) {
    if (!(tau >= 0.0 && tau <= 1.0)) {
        throw Error(ErrorCode::InvalidInput, "tau must lie in [0,1]");
    }
}

}  // namespace

std::vector<PredictionInstance> filter_by_confidence(std::span<const PredictionInstance> preds,
                                                     double tau) {
    check_tau(tau);
    std::vector<PredictionInstance> out;
    std::copy_if(preds.begin(), preds.end(), std::back_inserter(out),
                 [tau](const PredictionInstance& p) { return p.confidence >= tau; });
    return out;
}

double recommended_tau(std::string_view model) {
    std::string m(model);
    std::transform(m.begin(), m.end(), m.begin(), [](unsigned char c) {
        return std::isalnum(c) ? static_cast<char>(std::tolower(c)) : '\0';
    });
    m.erase(std::remove(m.begin(), m.end(), '\0'), m.end());
    if (m.find("solo") != std::string::npos) return 0.3;
    if (m.find("maskrcnn") != std::string::npos) return 0.6;
    return 0.0;
}

NuclearScore nuclear_from_counts(std::uint64_t positive, std::uint64_t negative) {
    if (positive + negative == 0) {
        throw Error(ErrorCode::NoCells, "no tumor cells to score");
    }
    NuclearScore s;
    s.positive = positive;
    s.negative = negative;
    s.percent_positive = 100.0 * static_cast<double>(positive) / static_cast<double>(positive + negative);
    return s;
}

NuclearScore nuclear_quantify(std::span<const CellClass> cells) {
    std::uint64_t pos = 0, neg = 0;
    for (auto c : cells) {
        if (c == CellClass::Immunopositive) {
            ++pos;
        } else if (c == CellClass::Immunonegative) {
            ++neg;
        } else {
            throw Error(ErrorCode::InvalidInput, "membrane class in a nuclear score");
        }
    }
    return nuclear_from_counts(pos, neg);
}

std::string_view to_string(Her2Category score) {
    switch (score) {
        case Her2Category::Zero: return "0";
        case Her2Category::OnePlus: return "1+";
        case Her2Category::TwoPlus: return "2+";
        case Her2Category::ThreePlus: return "3+";
    }
    return "";
}

std::string_view to_string(Assessment assessment) {
    switch (assessment) {
        case Assessment::Negative: return "Negative";
        case Assessment::Equivocal: return "Equivocal";
        case Assessment::Positive: return "Positive";
    }
    return "";
}

namespace {

// "> 10% of tumor cells" in exact integer arithmetic.
bool over_ten_percent(std::uint64_t count, std::uint64_t total) { return 10 * count > total; }

constexpr Her2Rule kRules[] = {
    {Her2Category::ThreePlus, Assessment::Positive,
     "complete, intense circumferential membrane staining in >10% of tumor cells",
     [](const MembraneCounts& c, std::uint64_t t) { return over_ten_percent(c[3], t); }},
    {Her2Category::TwoPlus, Assessment::Equivocal,
     "weak to moderate complete membrane staining in >10% of tumor cells",
     [](const MembraneCounts& c, std::uint64_t t) {
         return !over_ten_percent(c[3], t) && over_ten_percent(c[2], t);
     }},
    {Her2Category::OnePlus, Assessment::Negative,
     "faint, barely perceptible incomplete membrane staining in >10% of tumor cells",
     [](const MembraneCounts& c, std::uint64_t t) {
         return !over_ten_percent(c[3], t) && !over_ten_percent(c[2], t) && over_ten_percent(c[1], t);
     }},
    {Her2Category::Zero, Assessment::Negative,
     "no staining, or faint incomplete staining in <=10% of tumor cells",
     [](const MembraneCounts& c, std::uint64_t t) {
         return !over_ten_percent(c[3], t) && !over_ten_percent(c[2], t) && !over_ten_percent(c[1], t);
     }},
};

}  // namespace

std::span<const Her2Rule> her2_rules() { return kRules; }

Her2Score her2_from_counts(const MembraneCounts& counts) {
    Her2Score s;
    s.counts = counts;
    const auto total = s.total();
    if (total == 0) {
        throw Error(ErrorCode::NoCells, "no tumor cells to score");
    }
    for (std::size_t i = 0; i < 4; ++i) {
        s.percentages[i] = 100.0 * static_cast<double>(counts[i]) / static_cast<double>(total);
        if (std::abs(s.percentages[i] - 10.0) <= 0.5) s.near_boundary = true;
    }
    for (const auto& rule : kRules) {
        if (rule.applies(counts, total)) {
            s.score = rule.score;
            s.assessment = rule.assessment;
            break;
        }
    }
    return s;
}

Her2Score her2_quantify(std::span<const CellClass> cells) {
    MembraneCounts counts{};
    for (auto c : cells) {
        switch (c) {
            case CellClass::M0NoStaining: ++counts[0]; break;
            case CellClass::M1FaintIncomplete: ++counts[1]; break;
            case CellClass::M2ModerateComplete: ++counts[2]; break;
            case CellClass::M3IntenseComplete: ++counts[3]; break;
            default: throw Error(ErrorCode::InvalidInput, "nuclear class in a HER2 score");
        }
    }
    return her2_from_counts(counts);
}

NuclearScore merge(std::span<const NuclearScore> parts) {
    std::uint64_t pos = 0, neg = 0;
    for (const auto& p : parts) {
        pos += p.positive;
        neg += p.negative;
    }
    return nuclear_from_counts(pos, neg);
}

Her2Score merge(std::span<const Her2Score> parts) {
    MembraneCounts counts{};
    for (const auto& p : parts)
        for (std::size_t i = 0; i < 4; ++i) counts[i] += p.counts[i];
    return her2_from_counts(counts);
}

namespace {

double parse_number(std::string_view text) {
    std::string s(text);
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != s.size() || !std::isfinite(v)) {
        throw Error(ErrorCode::InvalidInput, "bad number in grid: '" + s + "'");
    }
    return v;
}

void check_grid(std::span<const double> grid) {
    if (grid.empty()) throw Error(ErrorCode::InvalidInput, "empty tau grid");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!(grid[i] >= 0.0 && grid[i] <= 1.0)) {
            throw Error(ErrorCode::InvalidInput, "tau grid values must lie in [0,1]");
        }
        if (i > 0 && !(grid[i] > grid[i - 1])) {
            throw Error(ErrorCode::InvalidInput, "tau grid must be strictly increasing");
        }
    }
}

}  // namespace

std::vector<double> parse_grid(std::string_view spec) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    for (;;) {
        const auto pos = spec.find(':', start);
        parts.push_back(spec.substr(start, pos == std::string_view::npos ? pos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    if (parts.size() != 3) {
        throw Error(ErrorCode::InvalidInput, "grid must look like start:stop:step");
    }
    const double lo = parse_number(parts[0]);
    const double hi = parse_number(parts[1]);
    const double step = parse_number(parts[2]);
    if (!(step > 0.0)) throw Error(ErrorCode::InvalidInput, "grid step must be positive");

    std::vector<double> grid;
    for (long k = 0;; ++k) {
        // Snap to 1e-9 so 0.05 steps print and compare as written.
        const double v = std::round((lo + static_cast<double>(k) * step) * 1e9) / 1e9;
        if (v > hi + 1e-9) break;
        grid.push_back(v);
        if (grid.size() > 100000) throw Error(ErrorCode::InvalidInput, "grid too large");
    }
    check_grid(grid);
    return grid;
}

ThresholdSweep sweep_threshold(const eval::Evaluator& evaluator, std::span<const double> grid) {
    check_grid(grid);
    ThresholdSweep out;
    out.grid.assign(grid.begin(), grid.end());
    for (double tau : grid) {
        const double m = evaluator.map_at(0.5, tau).map;
        out.map50.push_back(m);
        if (out.map50.size() == 1 || m > out.best_map) {
            out.best_map = m;
            out.best_tau = tau;
        }
    }
    return out;
}

BiomarkerScore score_cells(std::span<const CountedCell> cells, double tau,
                           std::optional<StainKind> stain, std::string provenance) {
    check_tau(tau);
    BiomarkerScore out;
    out.tau = tau;
    out.provenance = std::move(provenance);
    out.cells_before_filter = cells.size();

    std::vector<CellClass> kept;
    for (const auto& c : cells) {
        if (!c.confidence || *c.confidence >= tau) kept.push_back(c.cls);
    }
    std::vector<CellClass> all;
    for (const auto& c : cells) all.push_back(c.cls);
    auto family = common_family(all);
    if (stain && family && *family != *stain) {
        throw Error(ErrorCode::InvalidInput, "cell classes do not match the slide stain kind");
    }
    out.stain = stain ? *stain : family.value_or(StainKind::Nuclear);
    if (kept.empty()) {
        throw Error(ErrorCode::NoCells, "no tumor cells to score");
    }
    if (out.stain == StainKind::Nuclear) {
        out.nuclear = nuclear_quantify(kept);
    } else {
        out.her2 = her2_quantify(kept);
    }
    return out;
}

std::string render_text(const BiomarkerScore& score) {
    std::ostringstream os;
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%.2f", score.tau);
    os << "stain: " << to_string(score.stain) << "\n";
    os << "tau_th: " << buf << "\n";
    os << "provenance: " << score.provenance << "\n";
    if (score.nuclear) {
        const auto& n = *score.nuclear;
        os << "immunopositive: " << n.positive << "\n";
        os << "immunonegative: " << n.negative << "\n";
        std::snprintf(buf, sizeof(buf), "%.1f%% positive", n.percent_positive);
        os << buf << "\n";
    }
    if (score.her2) {
        const auto& h = *score.her2;
        for (std::size_t i = 0; i < 4; ++i) {
            std::snprintf(buf, sizeof(buf), "%-22s %6llu  %6.2f%%",
                          std::string(ihcq::to_string(kMembraneClasses[i])).c_str(),
                          static_cast<unsigned long long>(h.counts[i]), h.percentages[i]);
            os << buf << "\n";
        }
        os << "HER2 score: " << to_string(h.score) << " " << to_string(h.assessment) << "\n";
        if (h.near_boundary) os << "boundary: a category lies within 0.5 points of the 10% cut-off\n";
    }
    return os.str();
}

}  // namespace ihcq::scoring

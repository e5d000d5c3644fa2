#include "tipgrade/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tipgrade {
namespace {

double round2(double value) {
    return std::round(value * 100.0) / 100.0;
}

ScoreStats stats_from(std::vector<double> values, StdConvention convention) {
    ScoreStats stats;
    stats.n = values.size();
    if (values.empty()) {
        return stats;
    }
    stats.mean = mean_of(values);
    stats.median = median_of(values);
    if (values.size() > 1 || convention == StdConvention::Population) {
        stats.std_dev = std_dev_of(values, convention);
    }
    return stats;
}

} // namespace

double mean_of(std::span<const double> values) {
    if (values.empty()) {
        throw std::invalid_argument("mean of empty vector");
    }
    double sum = 0.0;
    for (double v : values) {
        sum += v;
    }
    return sum / static_cast<double>(values.size());
}

double median_of(std::span<const double> values) {
    if (values.empty()) {
        throw std::invalid_argument("median of empty vector");
    }
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    if (n % 2 == 1) {
        return sorted[n / 2];
    }
    return (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0;
}

double std_dev_of(std::span<const double> values, StdConvention convention) {
    const std::size_t n = values.size();
    if (n == 0 || (n == 1 && convention == StdConvention::Sample)) {
        throw std::invalid_argument("std dev needs at least two values under the sample convention");
    }
    const double mean = mean_of(values);
    double sum_sq = 0.0;
    for (double v : values) {
        const double d = v - mean;
        sum_sq += d * d;
    }
    const double denom = convention == StdConvention::Sample ? static_cast<double>(n - 1)
                                                             : static_cast<double>(n);
    return std::sqrt(sum_sq / denom);
}

ScoreStats score_statistics(std::span<const EvaluationRecord> records, StdConvention convention) {
    std::vector<double> scores;
    scores.reserve(records.size());
    for (const EvaluationRecord& r : records) {
        if (r.ok()) {
            scores.push_back(static_cast<double>(r.score));
        }
    }
    return stats_from(std::move(scores), convention);
}

ScoreStats score_statistics_over(std::span<const int> scores, StdConvention convention) {
    std::vector<double> values(scores.begin(), scores.end());
    return stats_from(std::move(values), convention);
}

AgreementStats agreement(std::span<const EvaluationRecord> records, const Dataset& dataset) {
    AgreementStats stats;
    double abs_sum = 0.0;
    double sq_sum = 0.0;
    for (const EvaluationRecord& r : records) {
        if (!r.ok()) {
            ++stats.excluded_sentinels;
            continue;
        }
        const HumanScore* human = dataset.find_human_score(r.question_id, r.student_id);
        if (human == nullptr) {
            ++stats.excluded_unpaired;
            continue;
        }
        const int deviation = r.score - human->score;
        stats.deviations.push_back({r.question_id, r.student_id, deviation});
        abs_sum += std::abs(deviation);
        sq_sum += static_cast<double>(deviation) * deviation;
    }
    stats.n_paired = stats.deviations.size();
    if (stats.n_paired > 0) {
        const double n = static_cast<double>(stats.n_paired);
        stats.mad = abs_sum / n;
        stats.rmse = std::sqrt(sq_sum / n);
    }
    return stats;
}

CriterionAnalysis criterion_analysis(std::span<const EvaluationRecord> records,
                                     std::size_t total_answers) {
    CriterionAnalysis analysis;
    analysis.total_answers = total_answers;
    for (bool c1 : {false, true}) {
        for (bool c2 : {false, true}) {
            for (bool c3 : {false, true}) {
                analysis.combinations[{c1, c2, c3}] = 0;
            }
        }
    }
    for (const EvaluationRecord& r : records) {
        if (r.method != Method::Additive) {
            throw std::invalid_argument("criterion_analysis expects Additive records only");
        }
        if (!r.ok() || !r.criteria_flags) {
            continue;
        }
        ++analysis.ok_records;
        const CriteriaFlags& f = *r.criteria_flags;
        analysis.criterion_counts[0] += f.c1;
        analysis.criterion_counts[1] += f.c2;
        analysis.criterion_counts[2] += f.c3;
        ++analysis.combinations[{f.c1, f.c2, f.c3}];
        if (r.reported_mismatch) {
            ++analysis.inconsistencies;
        }
    }
    if (total_answers > 0) {
        for (std::size_t i = 0; i < 3; ++i) {
            analysis.criterion_percentages[i] = round2(
                100.0 * static_cast<double>(analysis.criterion_counts[i]) /
                static_cast<double>(total_answers));
        }
        analysis.inconsistency_percentage = round2(
            100.0 * static_cast<double>(analysis.inconsistencies) /
            static_cast<double>(total_answers));
    }
    return analysis;
}

ScoreMatrix score_matrix(std::span<const EvaluationRecord> records, const Dataset& dataset) {
    ScoreMatrix matrix;
    std::map<std::string, std::size_t> row_index;
    for (const QuestionItem& q : dataset.questions()) {
        row_index.emplace(q.question_id, matrix.question_ids.size());
        matrix.question_ids.push_back(q.question_id);
        matrix.cells.push_back({});
    }
    for (const EvaluationRecord& r : records) {
        auto it = row_index.find(r.question_id);
        if (it == row_index.end()) {
            throw std::invalid_argument("record references unknown question " + r.question_id);
        }
        if (r.score < kSentinelScore || r.score > 4) {
            throw std::invalid_argument("record score outside [-1,4]: " +
                                        std::to_string(r.score));
        }
        const std::size_t column = ScoreMatrix::column_of(r.score);
        ++matrix.cells[it->second][column];
        ++matrix.histogram[column];
    }
    return matrix;
}

} // namespace tipgrade

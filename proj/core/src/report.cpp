#include "tipgrade/report.hpp"

#include "tipgrade/errors.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace tipgrade {
namespace {

std::string fixed(double value, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, value);
    return buf;
}

std::string opt3(const std::optional<double>& value) {
    return value ? fixed(*value, 3) : std::string();
}

std::string opt1(const std::optional<double>& value) {
    return value ? fixed(*value, 1) : std::string();
}

std::string csv_field(const std::string& value) {
    if (value.find_first_of(",\"\n") == std::string::npos) {
        return value;
    }
    std::string quoted = "\"";
    for (char c : value) {
        if (c == '"') {
            quoted += "\"\"";
        } else {
            quoted += c;
        }
    }
    quoted += '"';
    return quoted;
}

class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, const std::string& header) : out_(path, std::ios::binary | std::ios::trunc) {
        if (!out_) {
            throw StoreError("cannot write report file: " + path.string());
        }
        out_ << header << '\n';
        path_ = path;
    }

    void row(const std::vector<std::string>& fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i > 0) {
                out_ << ',';
            }
            out_ << csv_field(fields[i]);
        }
        out_ << '\n';
    }

    void close() {
        out_.flush();
        if (!out_) {
            throw StoreError("write failed: " + path_.string());
        }
        out_.close();
    }

private:
    std::ofstream out_;
    std::filesystem::path path_;
};

} // namespace

std::vector<MethodModelGroup> group_records(std::span<const EvaluationRecord> records) {
    std::map<std::pair<int, std::string>, MethodModelGroup> groups;
    for (const EvaluationRecord& r : records) {
        auto key = std::make_pair(static_cast<int>(r.method), r.model_name);
        auto it = groups.find(key);
        if (it == groups.end()) {
            MethodModelGroup group;
            group.method = r.method;
            group.model_name = r.model_name;
            it = groups.emplace(std::move(key), std::move(group)).first;
        }
        it->second.records.push_back(r);
    }
    std::vector<MethodModelGroup> out;
    out.reserve(groups.size());
    for (auto& [key, group] : groups) {
        out.push_back(std::move(group));
    }
    return out;
}

void emit_report(std::span<const EvaluationRecord> records, const Dataset& dataset,
                 const std::filesystem::path& out_dir, StdConvention convention) {
    std::filesystem::create_directories(out_dir);
    const std::vector<MethodModelGroup> groups = group_records(records);
    const char* std_column = convention == StdConvention::Sample ? "std_sample" : "std_population";

    {
        CsvWriter stats(out_dir / "stats.csv",
                        std::string("method,n,mean,median,") + std_column + ",model");
        for (const auto& group : groups) {
            const ScoreStats s = score_statistics(group.records, convention);
            stats.row({method_display_name(group.method), std::to_string(s.n), opt3(s.mean),
                       opt1(s.median), opt3(s.std_dev), group.model_name});
        }
        stats.close();
    }

    {
        CsvWriter agree(out_dir / "agreement.csv", "method,n_paired,mad,rmse,model");
        for (const auto& group : groups) {
            const AgreementStats a = agreement(group.records, dataset);
            agree.row({method_display_name(group.method), std::to_string(a.n_paired), opt3(a.mad),
                       opt3(a.rmse), group.model_name});
        }
        agree.close();
    }

    {
        CsvWriter heat(out_dir / "heatmap.csv", "question_id,score,count,method,model");
        CsvWriter hist(out_dir / "histogram.csv", "score,count,method,model");
        for (const auto& group : groups) {
            const ScoreMatrix m = score_matrix(group.records, dataset);
            for (std::size_t row = 0; row < m.question_ids.size(); ++row) {
                for (int score = -1; score <= 4; ++score) {
                    heat.row({m.question_ids[row], std::to_string(score),
                              std::to_string(m.cells[row][ScoreMatrix::column_of(score)]),
                              method_display_name(group.method), group.model_name});
                }
            }
            for (int score = -1; score <= 4; ++score) {
                hist.row({std::to_string(score),
                          std::to_string(m.histogram[ScoreMatrix::column_of(score)]),
                          method_display_name(group.method), group.model_name});
            }
        }
        heat.close();
        hist.close();
    }

    {
        CsvWriter devs(out_dir / "deviations.csv", "question_id,student_id,deviation,method,model");
        for (const auto& group : groups) {
            const AgreementStats a = agreement(group.records, dataset);
            for (const DeviationEntry& d : a.deviations) {
                devs.row({d.question_id, d.student_id, std::to_string(d.deviation),
                          method_display_name(group.method), group.model_name});
            }
        }
        devs.close();
    }

    {
        CsvWriter freq(out_dir / "criterion_frequencies.csv", "criterion,count,percentage,model");
        CsvWriter combos(out_dir / "criterion_combinations.csv", "c1,c2,c3,count,model");
        for (const auto& group : groups) {
            if (group.method != Method::Additive) {
                continue;
            }
            const CriterionAnalysis c =
                criterion_analysis(group.records, dataset.answers().size());
            const char* names[3] = {"c1_correctness", "c2_clarity", "c3_explanation"};
            for (std::size_t i = 0; i < 3; ++i) {
                freq.row({names[i], std::to_string(c.criterion_counts[i]),
                          fixed(c.criterion_percentages[i], 2), group.model_name});
            }
            freq.row({"reported_score_mismatch", std::to_string(c.inconsistencies),
                      fixed(c.inconsistency_percentage, 2), group.model_name});
            for (const auto& [flags, count] : c.combinations) {
                combos.row({flags[0] ? "true" : "false", flags[1] ? "true" : "false",
                            flags[2] ? "true" : "false", std::to_string(count),
                            group.model_name});
            }
        }
        freq.close();
        combos.close();
    }

    std::ofstream summary(out_dir / "summary.txt", std::ios::binary | std::ios::trunc);
    if (!summary) {
        throw StoreError("cannot write report file: " + (out_dir / "summary.txt").string());
    }
    summary << "tipgrade report\n";
    summary << "std convention: "
            << (convention == StdConvention::Sample ? "sample (n-1)" : "population (n)") << "\n\n";

    summary << "Score statistics\n";
    summary << "  method           model                 n     mean   median  std\n";
    if (!dataset.human_scores().empty()) {
        std::vector<int> human;
        human.reserve(dataset.human_scores().size());
        for (const HumanScore& h : dataset.human_scores()) {
            human.push_back(h.score);
        }
        const ScoreStats s = score_statistics_over(human, convention);
        char line[160];
        std::snprintf(line, sizeof(line), "  %-16s %-20s %5zu  %-6s %-7s %s\n", "Human",
                      "(baseline)", s.n, opt3(s.mean).c_str(), opt1(s.median).c_str(),
                      opt3(s.std_dev).c_str());
        summary << line;
    }
    for (const auto& group : groups) {
        const ScoreStats s = score_statistics(group.records, convention);
        char line[160];
        std::snprintf(line, sizeof(line), "  %-16s %-20s %5zu  %-6s %-7s %s\n",
                      method_display_name(group.method), group.model_name.c_str(), s.n,
                      opt3(s.mean).c_str(), opt1(s.median).c_str(), opt3(s.std_dev).c_str());
        summary << line;
    }

    summary << "\nAgreement with human scoring\n";
    summary << "  method           model                 n_paired  MAD     RMSE\n";
    for (const auto& group : groups) {
        const AgreementStats a = agreement(group.records, dataset);
        char line[160];
        std::snprintf(line, sizeof(line), "  %-16s %-20s %8zu  %-6s  %s\n",
                      method_display_name(group.method), group.model_name.c_str(), a.n_paired,
                      opt3(a.mad).c_str(), opt3(a.rmse).c_str());
        summary << line;
    }

    for (const auto& group : groups) {
        if (group.method != Method::Additive) {
            continue;
        }
        const CriterionAnalysis c = criterion_analysis(group.records, dataset.answers().size());
        summary << "\nAdditive criterion analysis: " << group.model_name << "\n";
        const char* labels[3] = {"C1 correctness", "C2 clarity", "C3 explanation"};
        for (std::size_t i = 0; i < 3; ++i) {
            summary << "  " << labels[i] << ": " << c.criterion_counts[i] << " ("
                    << fixed(c.criterion_percentages[i], 2) << "%)\n";
        }
        summary << "  combinations (c1,c2,c3 -> answers):\n";
        for (const auto& [flags, count] : c.combinations) {
            summary << "    " << (flags[0] ? "T" : "F") << (flags[1] ? "T" : "F")
                    << (flags[2] ? "T" : "F") << " -> " << count << "\n";
        }
        summary << "  reported/recomputed mismatches: " << c.inconsistencies << "\n";
    }

    summary << "\nRecord counts\n";
    for (const auto& group : groups) {
        std::size_t ok = 0, overflow = 0, failed = 0;
        for (const EvaluationRecord& r : group.records) {
            switch (r.status) {
                case RecordStatus::Ok: ++ok; break;
                case RecordStatus::Overflow: ++overflow; break;
                case RecordStatus::ParseFailed: ++failed; break;
            }
        }
        summary << "  " << method_display_name(group.method) << " / " << group.model_name << ": "
                << group.records.size() << " records, " << ok << " ok, " << overflow
                << " overflow, " << failed << " parse_failed\n";
    }
    summary.flush();
    if (!summary) {
        throw StoreError("write failed: " + (out_dir / "summary.txt").string());
    }
}

} // namespace tipgrade

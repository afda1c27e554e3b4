#include "tidybot/eval/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdio>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "tidybot/core/dataset.hpp"
#include "tidybot/eval/pipeline.hpp"

namespace tidybot::eval {

namespace {

using Truth = std::vector<std::pair<std::string, std::string>>;

Truth truth_of(const std::vector<Placement>& ps) {
    Truth t;
    for (const auto& p : ps) t.emplace_back(p.object.str(), p.receptacle.str());
    return t;
}

Truth truth_of(const std::vector<PrimitiveChoice>& cs) {
    Truth t;
    for (const auto& c : cs) t.emplace_back(c.object.str(), std::string(to_string(c.primitive)));
    return t;
}

SplitResult score_split(const Truth& truth, const std::set<std::string>* known_labels,
                        const std::vector<Prediction>& preds, Split split, std::vector<Anomaly>& anomalies) {
    SplitResult r;
    r.predictions = preds;
    r.total = truth.size();

    std::map<std::string, std::string> truth_by_object;
    for (const auto& [obj, label] : truth) truth_by_object.emplace(normalize_for_match(obj), normalize_for_match(label));

    std::map<std::string, std::string> first;
    for (const auto& p : preds) {
        const auto obj = normalize_for_match(p.object);
        if (!truth_by_object.count(obj)) {
            anomalies.push_back({split, AnomalyKind::ExtraneousObject, p.object});
            continue;
        }
        if (first.count(obj)) {
            anomalies.push_back({split, AnomalyKind::DuplicatePrediction, p.object});
            continue;
        }
        const auto label = normalize_for_match(p.label);
        if (known_labels && !known_labels->count(label))
            anomalies.push_back({split, AnomalyKind::UnknownReceptacle, p.object + " -> " + p.label});
        first.emplace(obj, label);
    }

    for (const auto& [obj, label] : truth_by_object) {
        auto it = first.find(obj);
        if (it == first.end())
            ++r.unpredicted;
        else if (it->second == label)
            ++r.correct;
        else
            ++r.incorrect;
    }
    // Duplicate object names in a split collapse in the map above; count them as unpredicted.
    r.unpredicted += truth.size() - truth_by_object.size();
    r.accuracy = r.total == 0 ? 0.0 : static_cast<double>(r.correct) / static_cast<double>(r.total);
    return r;
}

void add_warnings(std::vector<Anomaly>& out, Split split, const std::vector<std::string>& warnings) {
    for (const auto& w : warnings) out.push_back({split, AnomalyKind::UnparsedOutput, w});
}

void method_error(std::vector<Anomaly>& out, Split split, const std::exception& e) {
    out.push_back({split, AnomalyKind::MethodError, e.what()});
}

std::string seen_protocol(Task task, MethodKind kind) {
    const std::string thing = task == Task::Receptacle ? "receptacle" : "primitive";
    switch (kind) {
    case MethodKind::Summarization:
    case MethodKind::HumanSummary:
        return "seen objects are re-queried through the summary, like unseen objects";
    case MethodKind::ExamplesOnly:
        return "seen objects are queried with the seen examples in the prompt";
    case MethodKind::Commonsense:
        return "seen objects are queried without examples";
    case MethodKind::Taxonomy:
    case MethodKind::Embedding:
        return "seen objects take the " + thing + " of their nearest seen neighbor, self matches included";
    }
    return {};
}

template <typename Fn>
std::vector<ScenarioResult> run_pool(const Dataset& ds, std::size_t workers, Fn&& fn) {
    if (workers == 0) throw ConfigError("worker count must be positive");
    std::vector<ScenarioResult> results(ds.scenarios.size());
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < ds.scenarios.size(); i = next++) results[i] = fn(ds.scenarios[i]);
    };
    const auto n = std::min(workers, ds.scenarios.size());
    if (n <= 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(n);
        for (std::size_t t = 0; t < n; ++t) pool.emplace_back(work);
    }
    return results;
}

std::string fmt_double(double v) {
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return ec == std::errc{} ? std::string(buf, end) : std::string("nan");
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string percent(double v) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%6.2f%%", v * 100.0);
    return buf;
}

} // namespace

std::string_view to_string(MethodKind k) noexcept {
    switch (k) {
    case MethodKind::Summarization: return "summarization";
    case MethodKind::ExamplesOnly: return "examples-only";
    case MethodKind::Commonsense: return "commonsense";
    case MethodKind::Taxonomy: return "taxonomy";
    case MethodKind::Embedding: return "embedding";
    case MethodKind::HumanSummary: return "human-summary";
    }
    return "?";
}

std::optional<MethodKind> parse_method_kind(std::string_view s) noexcept {
    for (auto k : {MethodKind::Summarization, MethodKind::ExamplesOnly, MethodKind::Commonsense, MethodKind::Taxonomy,
                   MethodKind::Embedding, MethodKind::HumanSummary})
        if (to_string(k) == s) return k;
    return std::nullopt;
}

bool uses_llm(MethodKind k) noexcept { return k != MethodKind::Taxonomy && k != MethodKind::Embedding; }

std::string_view to_string(Split s) noexcept { return s == Split::Seen ? "seen" : "unseen"; }

std::string_view to_string(AnomalyKind k) noexcept {
    switch (k) {
    case AnomalyKind::UnparsedOutput: return "unparsed_output";
    case AnomalyKind::ExtraneousObject: return "extraneous_object";
    case AnomalyKind::UnknownReceptacle: return "unknown_receptacle";
    case AnomalyKind::DuplicatePrediction: return "duplicate_prediction";
    case AnomalyKind::MethodError: return "method_error";
    }
    return "?";
}

std::string_view to_string(Task t) noexcept { return t == Task::Receptacle ? "receptacle" : "primitive"; }

void MethodSpec::validate() const {
    const auto name = std::string(to_string(kind));
    if (uses_llm(kind)) {
        if (!backend) throw ConfigError("method '" + name + "' needs a backend");
        backend->validate();
    }
    if (kind == MethodKind::Taxonomy && !resources.taxonomy)
        throw ConfigError("method 'taxonomy' needs a taxonomy edge file");
    if (kind == MethodKind::Embedding && !resources.embeddings)
        throw ConfigError("method 'embedding' needs an embedding table");
    if (kind == MethodKind::HumanSummary && !resources.human_summaries)
        throw ConfigError("method 'human-summary' needs a summary file");
}

void MethodContext::check() const {
    const auto name = std::string(to_string(kind));
    if (uses_llm(kind) && !backend) throw ConfigError("method '" + name + "' needs a backend");
    if (kind == MethodKind::Taxonomy && (!taxonomy || !mapping))
        throw ConfigError("method 'taxonomy' needs a taxonomy and a name mapping");
    if (kind == MethodKind::Embedding && !embeddings) throw ConfigError("method 'embedding' needs an embedding table");
    if (kind == MethodKind::HumanSummary && human_summaries.empty())
        throw ConfigError("method 'human-summary' needs at least one summary");
}

std::map<std::string, std::string> load_human_summaries(const std::filesystem::path& path) {
    std::istringstream in(read_file(path));
    std::map<std::string, std::string> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty() || line.front() == '#') continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos)
            throw ParseError(path.string() + ":" + std::to_string(line_no) + ": expected scenario_id<TAB>summary",
                             line_no, "");
        std::string id(trim(line.substr(0, tab)));
        if (!out.emplace(id, std::string(trim(line.substr(tab + 1)))).second)
            throw ParseError(path.string() + ":" + std::to_string(line_no) + ": duplicate scenario '" + id + "'",
                             line_no, id);
    }
    return out;
}

MethodContext prepare_method(const MethodSpec& spec) {
    spec.validate();
    MethodContext m;
    m.kind = spec.kind;
    if (spec.backend) {
        m.params = spec.backend->decoding_params();
        if (uses_llm(spec.kind)) m.backend = llm::make_backend(*spec.backend);
    }
    const auto& r = spec.resources;
    if (spec.kind == MethodKind::Taxonomy) {
        auto g = std::make_shared<baselines::TaxonomyGraph>(baselines::TaxonomyGraph::load(*r.taxonomy, r.taxonomy_synonyms));
        auto map = std::make_shared<baselines::NameMapping>();
        if (r.name_mapping) {
            *map = baselines::NameMapping::load(*r.name_mapping);
            try {
                map->check_against(*g);
            } catch (const InvalidArgument& e) {
                throw ConfigError(e.what());
            }
        }
        m.taxonomy = std::move(g);
        m.mapping = std::move(map);
    }
    if (spec.kind == MethodKind::Embedding)
        m.embeddings = std::make_shared<baselines::EmbeddingTable>(baselines::EmbeddingTable::load(*r.embeddings));
    if (spec.kind == MethodKind::HumanSummary) m.human_summaries = load_human_summaries(*r.human_summaries);
    m.check();
    return m;
}

std::vector<Prediction> to_predictions(const std::vector<Placement>& placements) {
    std::vector<Prediction> out;
    for (const auto& p : placements) out.push_back({p.object.str(), p.receptacle.str()});
    return out;
}

std::vector<Prediction> to_predictions(const std::vector<PrimitiveChoice>& choices) {
    std::vector<Prediction> out;
    for (const auto& c : choices) out.push_back({c.object.str(), std::string(to_string(c.primitive))});
    return out;
}

ScenarioResult score_scenario(const Scenario& scenario, const std::vector<Prediction>& seen,
                              const std::vector<Prediction>& unseen) {
    ScenarioResult r;
    r.scenario_id = scenario.id;
    r.criteria = scenario.criteria;
    std::set<std::string> known;
    for (const auto& rec : scenario.receptacles) known.insert(normalize_for_match(rec.str()));
    r.seen = score_split(truth_of(scenario.seen), &known, seen, Split::Seen, r.anomalies);
    r.unseen = score_split(truth_of(scenario.unseen), &known, unseen, Split::Unseen, r.anomalies);
    return r;
}

ScenarioResult score_primitive_scenario(const Scenario& scenario, const std::vector<Prediction>& seen,
                                        const std::vector<Prediction>& unseen) {
    if (!scenario.has_primitives())
        throw MissingAnnotations("scenario '" + scenario.id + "' has no primitive annotations");
    ScenarioResult r;
    r.scenario_id = scenario.id;
    r.criteria = scenario.criteria;
    const std::set<std::string> known{"place", "toss"};
    r.seen = score_split(truth_of(*scenario.seen_primitives), &known, seen, Split::Seen, r.anomalies);
    r.unseen = score_split(truth_of(*scenario.unseen_primitives), &known, unseen, Split::Unseen, r.anomalies);
    return r;
}

SummarizationOutput run_summarization_method(const Scenario& scenario, llm::Backend& backend,
                                             const llm::DecodingParams& params) {
    auto summary = pipeline::summarize_receptacles(scenario.receptacles, scenario.seen, backend, params);
    auto unseen = pipeline::select_receptacles(summary, scenario.unseen_objects(), scenario.receptacles, backend, params);
    auto seen = pipeline::select_receptacles(summary, scenario.seen_objects(), scenario.receptacles, backend, params);
    return {std::move(summary), std::move(seen), std::move(unseen)};
}

ScenarioResult evaluate_scenario(const Scenario& sc, const MethodContext& m) {
    std::vector<Anomaly> anomalies;
    std::vector<Prediction> preds[2];
    std::optional<std::string> summary_text;
    const Split splits[2] = {Split::Seen, Split::Unseen};
    auto targets = [&](Split s) { return s == Split::Seen ? sc.seen_objects() : sc.unseen_objects(); };

    auto via_summary = [&](const Summary& summary) {
        summary_text = summary.text();
        for (int i = 0; i < 2; ++i) {
            try {
                auto p = pipeline::select_receptacles(summary, targets(splits[i]), sc.receptacles, *m.backend, m.params);
                preds[i] = to_predictions(p.placements);
                add_warnings(anomalies, splits[i], p.warnings);
            } catch (const std::exception& e) {
                method_error(anomalies, splits[i], e);
            }
        }
    };
    auto fail_both = [&](const std::exception& e) {
        for (auto s : splits) method_error(anomalies, s, e);
    };

    switch (m.kind) {
    case MethodKind::Summarization:
        try {
            via_summary(pipeline::summarize_receptacles(sc.receptacles, sc.seen, *m.backend, m.params));
        } catch (const std::exception& e) {
            fail_both(e);
        }
        break;
    case MethodKind::HumanSummary: {
        auto it = m.human_summaries.find(sc.id);
        try {
            if (it == m.human_summaries.end()) throw ConfigError("no human summary for scenario '" + sc.id + "'");
            via_summary(Summary(it->second));
        } catch (const std::exception& e) {
            fail_both(e);
        }
        break;
    }
    case MethodKind::ExamplesOnly:
    case MethodKind::Commonsense:
        for (int i = 0; i < 2; ++i) {
            try {
                auto p = m.kind == MethodKind::ExamplesOnly
                             ? baselines::examples_only_predict(sc, *m.backend, m.params, targets(splits[i]))
                             : baselines::commonsense_predict(sc, *m.backend, m.params, targets(splits[i]));
                preds[i] = to_predictions(p.placements);
                add_warnings(anomalies, splits[i], p.warnings);
            } catch (const std::exception& e) {
                method_error(anomalies, splits[i], e);
            }
        }
        break;
    case MethodKind::Taxonomy:
    case MethodKind::Embedding:
        for (int i = 0; i < 2; ++i) {
            for (const auto& obj : targets(splits[i])) {
                try {
                    const auto rec = m.kind == MethodKind::Taxonomy
                                         ? baselines::taxonomy_predict(sc, *m.taxonomy, *m.mapping, obj)
                                         : baselines::embedding_predict(sc, *m.embeddings, obj);
                    preds[i].push_back({obj.str(), rec.str()});
                } catch (const std::exception& e) {
                    method_error(anomalies, splits[i], e);
                }
            }
        }
        break;
    }

    auto r = score_scenario(sc, preds[0], preds[1]);
    r.summary = std::move(summary_text);
    anomalies.insert(anomalies.end(), r.anomalies.begin(), r.anomalies.end());
    r.anomalies = std::move(anomalies);
    return r;
}

ScenarioResult evaluate_primitive_scenario(const Scenario& sc, const MethodContext& m) {
    if (!sc.has_primitives()) throw MissingAnnotations("scenario '" + sc.id + "' has no primitive annotations");
    std::vector<Anomaly> anomalies;
    std::vector<Prediction> preds[2];
    std::optional<std::string> summary_text;
    const Split splits[2] = {Split::Seen, Split::Unseen};
    auto targets = [&](Split s) {
        std::vector<ObjectName> out;
        for (const auto& c : s == Split::Seen ? *sc.seen_primitives : *sc.unseen_primitives) out.push_back(c.object);
        return out;
    };

    switch (m.kind) {
    case MethodKind::Summarization:
        try {
            const auto summary = pipeline::summarize_primitives(*sc.seen_primitives, *m.backend, m.params);
            summary_text = summary.text();
            for (int i = 0; i < 2; ++i) {
                try {
                    auto p = pipeline::select_primitives(summary, targets(splits[i]), *m.backend, m.params);
                    preds[i] = to_predictions(p.choices);
                    add_warnings(anomalies, splits[i], p.warnings);
                } catch (const std::exception& e) {
                    method_error(anomalies, splits[i], e);
                }
            }
        } catch (const std::exception& e) {
            for (auto s : splits) method_error(anomalies, s, e);
        }
        break;
    case MethodKind::Taxonomy:
    case MethodKind::Embedding:
        for (int i = 0; i < 2; ++i) {
            for (const auto& obj : targets(splits[i])) {
                try {
                    const auto prim = m.kind == MethodKind::Taxonomy
                                          ? baselines::taxonomy_predict_primitive(sc, *m.taxonomy, *m.mapping, obj)
                                          : baselines::embedding_predict_primitive(sc, *m.embeddings, obj);
                    preds[i].push_back({obj.str(), std::string(to_string(prim))});
                } catch (const MissingAnnotations&) {
                    throw;
                } catch (const std::exception& e) {
                    method_error(anomalies, splits[i], e);
                }
            }
        }
        break;
    default:
        throw ConfigError("method '" + std::string(to_string(m.kind)) + "' does not support primitive benchmarks");
    }

    auto r = score_primitive_scenario(sc, preds[0], preds[1]);
    r.summary = std::move(summary_text);
    anomalies.insert(anomalies.end(), r.anomalies.begin(), r.anomalies.end());
    r.anomalies = std::move(anomalies);
    return r;
}

BenchmarkReport aggregate(Task task, const MethodContext& method, std::vector<ScenarioResult> results) {
    BenchmarkReport rep;
    rep.task = task;
    rep.method = method.kind;
    if (uses_llm(method.kind)) rep.model_id = method.params.model_id;
    if (method.backend) rep.backend_fingerprint = method.backend->fingerprint();
    rep.seen_protocol = seen_protocol(task, method.kind);
    std::sort(results.begin(), results.end(),
              [](const ScenarioResult& a, const ScenarioResult& b) { return a.scenario_id < b.scenario_id; });
    rep.results = std::move(results);

    double seen = 0, unseen = 0;
    std::map<SortingCriterion, std::pair<double, double>> sums;
    for (const auto& r : rep.results) {
        seen += r.seen.accuracy;
        unseen += r.unseen.accuracy;
        for (auto c : r.criteria) {
            auto& st = rep.per_criterion[c];
            ++st.scenarios;
            sums[c].first += r.seen.accuracy;
            sums[c].second += r.unseen.accuracy;
        }
    }
    if (!rep.results.empty()) {
        const auto n = static_cast<double>(rep.results.size());
        rep.macro_acc_seen = seen / n;
        rep.macro_acc_unseen = unseen / n;
    }
    for (auto& [c, st] : rep.per_criterion) {
        const auto n = static_cast<double>(st.scenarios);
        st.macro_acc_seen = sums[c].first / n;
        st.macro_acc_unseen = sums[c].second / n;
    }
    return rep;
}

BenchmarkReport run_benchmark(const Dataset& ds, const MethodContext& method, std::size_t workers) {
    method.check();
    auto results = run_pool(ds, workers, [&](const Scenario& sc) { return evaluate_scenario(sc, method); });
    return aggregate(Task::Receptacle, method, std::move(results));
}

BenchmarkReport run_benchmark(const Dataset& ds, const MethodSpec& method, std::size_t workers) {
    return run_benchmark(ds, prepare_method(method), workers);
}

BenchmarkReport run_primitive_benchmark(const Dataset& ds, const MethodContext& method, std::size_t workers) {
    method.check();
    if (method.kind != MethodKind::Summarization && method.kind != MethodKind::Taxonomy &&
        method.kind != MethodKind::Embedding)
        throw ConfigError("method '" + std::string(to_string(method.kind)) +
                          "' does not support primitive benchmarks");
    for (const auto& sc : ds.scenarios)
        if (!sc.has_primitives()) throw MissingAnnotations("scenario '" + sc.id + "' has no primitive annotations");
    auto results = run_pool(ds, workers, [&](const Scenario& sc) { return evaluate_primitive_scenario(sc, method); });
    return aggregate(Task::Primitive, method, std::move(results));
}

BenchmarkReport run_primitive_benchmark(const Dataset& ds, const MethodSpec& method, std::size_t workers) {
    return run_primitive_benchmark(ds, prepare_method(method), workers);
}

std::size_t BenchmarkReport::anomaly_count() const noexcept {
    std::size_t n = 0;
    for (const auto& r : results) n += r.anomalies.size();
    return n;
}

std::string BenchmarkReport::to_json() const {
    using nlohmann::ordered_json;
    const char* label_key = task == Task::Receptacle ? "receptacle" : "primitive";
    auto split_json = [&](const SplitResult& s) {
        ordered_json preds = ordered_json::array();
        for (const auto& p : s.predictions) preds.push_back({{"object", p.object}, {label_key, p.label}});
        return ordered_json{{"total", s.total},
                            {"correct", s.correct},
                            {"incorrect", s.incorrect},
                            {"unpredicted", s.unpredicted},
                            {"accuracy", s.accuracy},
                            {"predictions", std::move(preds)}};
    };

    ordered_json criteria = ordered_json::object();
    for (const auto& [c, st] : per_criterion)
        criteria[std::string(to_string(c))] = {
            {"scenarios", st.scenarios}, {"macro_acc_seen", st.macro_acc_seen}, {"macro_acc_unseen", st.macro_acc_unseen}};

    ordered_json scenarios = ordered_json::array();
    for (const auto& r : results) {
        ordered_json tags = ordered_json::array();
        for (auto c : r.criteria) tags.push_back(std::string(to_string(c)));
        ordered_json anomalies = ordered_json::array();
        for (const auto& a : r.anomalies)
            anomalies.push_back(
                {{"split", std::string(to_string(a.split))}, {"kind", std::string(to_string(a.kind))}, {"detail", a.detail}});
        scenarios.push_back({{"id", r.scenario_id},
                             {"criteria", std::move(tags)},
                             {"summary", r.summary ? ordered_json(*r.summary) : ordered_json(nullptr)},
                             {"seen", split_json(r.seen)},
                             {"unseen", split_json(r.unseen)},
                             {"anomalies", std::move(anomalies)}});
    }

    ordered_json doc{{"task", std::string(to_string(task))},
                     {"method", std::string(to_string(method))},
                     {"model_id", model_id},
                     {"backend_fingerprint", backend_fingerprint},
                     {"seen_protocol", seen_protocol},
                     {"scenario_count", results.size()},
                     {"anomaly_count", anomaly_count()},
                     {"macro_acc_seen", macro_acc_seen},
                     {"macro_acc_unseen", macro_acc_unseen},
                     {"per_criterion", std::move(criteria)},
                     {"scenarios", std::move(scenarios)}};
    return doc.dump(2) + "\n";
}

std::string BenchmarkReport::to_csv() const {
    std::string out = "scenario_id,split,criteria,total,correct,incorrect,unpredicted,accuracy,anomalies\n";
    for (const auto& r : results) {
        std::string tags;
        for (auto c : r.criteria) {
            if (!tags.empty()) tags += ';';
            tags += to_string(c);
        }
        for (auto s : {Split::Seen, Split::Unseen}) {
            const auto& sp = r.split(s);
            const auto flagged =
                std::count_if(r.anomalies.begin(), r.anomalies.end(), [&](const Anomaly& a) { return a.split == s; });
            out += csv_field(r.scenario_id) + ',' + std::string(to_string(s)) + ',' + tags + ',' +
                   std::to_string(sp.total) + ',' + std::to_string(sp.correct) + ',' + std::to_string(sp.incorrect) +
                   ',' + std::to_string(sp.unpredicted) + ',' + fmt_double(sp.accuracy) + ',' +
                   std::to_string(flagged) + '\n';
        }
    }
    return out;
}

std::string BenchmarkReport::to_text() const {
    std::ostringstream o;
    o << "method " << to_string(method) << ", task " << to_string(task) << ", " << results.size() << " scenarios, "
      << anomaly_count() << " anomalies\n";
    o << "macro accuracy  seen " << percent(macro_acc_seen) << "  unseen " << percent(macro_acc_unseen) << "\n\n";
    char line[96];
    std::snprintf(line, sizeof line, "%-20s %5s %9s %9s\n", "criterion", "n", "seen", "unseen");
    o << line;
    for (const auto& [c, st] : per_criterion) {
        std::snprintf(line, sizeof line, "%-20s %5zu %9s %9s\n", std::string(to_string(c)).c_str(), st.scenarios,
                      percent(st.macro_acc_seen).c_str(), percent(st.macro_acc_unseen).c_str());
        o << line;
    }
    return o.str();
}

} // namespace tidybot::eval

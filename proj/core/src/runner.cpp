#include "rsrag/runner.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "rsrag/error.hpp"
#include "rng.hpp"

namespace rsrag {

using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

std::vector<Snippet> snippets_for(const VectorStore& store,
                                  const std::vector<RankedCandidate>& candidates) {
    const VectorCollection& texts = store.collection(Modality::Text);
    std::vector<Snippet> snippets;
    for (const RankedCandidate& c : candidates) {
        // Entries were inserted in chunk order, which indices_for_record keeps.
        for (std::size_t i : texts.indices_for_record(c.record_id)) {
            const CollectionEntry& e = texts.entries()[i];
            if (!e.payload.contains("text")) continue;
            snippets.push_back({c.record_id, e.payload["text"].get<std::string>(),
                                c.fused_score});
        }
    }
    return snippets;
}

}  // namespace

AnswerResult answer_query(const VectorStore& store, const EmbeddingGateway& embedder,
                          const GenerationGateway& generator, const Query& query, Task task,
                          const PipelineConfig& config, const FusionClient* fusion) {
    const TaskPreset preset = preset_for_task(task);
    const std::string& instruction =
        config.instruction.empty() ? preset.instruction : config.instruction;
    const std::string& header =
        config.knowledge_header.empty() ? preset.knowledge_header : config.knowledge_header;

    AnswerResult out;
    auto t0 = Clock::now();
    out.retrieval = retrieve(store, embedder, query, config.retrieval_params());
    out.timings.retrieve_ms = ms_since(t0);

    t0 = Clock::now();
    std::vector<Snippet> snippets = snippets_for(store, out.retrieval.candidates);
    FusedContext fused =
        fuse_context(snippets, config.fusion_mode, config.fusion_max_tokens, fusion);
    out.timings.fuse_ms = ms_since(t0);

    out.prompt = build_prompt(instruction, query.text, header, fused);

    t0 = Clock::now();
    GenerationRequest request{query.image_ref, out.prompt, config.max_tokens,
                              config.temperature};
    out.text = generator.generate(request);
    out.timings.generate_ms = ms_since(t0);
    return out;
}

TaskReport run_task(Task task, const Dataset& dataset, const VectorStore& store,
                    const PipelineConfig& config, const EmbeddingGateway& embedder,
                    const GenerationGateway& generator, const FusionClient* fusion) {
    config.validate();
    if (store.collection(Modality::Text).size() == 0 &&
        store.collection(Modality::Image).size() == 0)
        throw Error(ErrorCode::StoreEmpty, "store has no entries");

    TaskReport report;
    report.task = task;
    report.config = config;
    report.has_accuracy = task == Task::Classification;

    std::vector<const TaskExample*> examples;
    for (const TaskExample& ex : dataset.examples)
        if (ex.task == task && ex.split == Split::Test) examples.push_back(&ex);
    std::sort(examples.begin(), examples.end(),
              [](const TaskExample* a, const TaskExample* b) {
                  return a->example_id < b->example_id;
              });

    if (examples.empty()) {
        report.warnings.push_back("test split has no examples for this task");
        report.accuracy.warning = report.has_accuracy;
        return report;
    }

    std::set<std::string> warnings;
    std::vector<ScoredItem> items;
    std::vector<std::string> predictions, golds;
    items.reserve(examples.size());

    for (const TaskExample* ex : examples) {
        ExampleOutcome outcome;
        outcome.example_id = ex->example_id;

        Query query;
        query.text = ex->query_text;
        query.image_ref = ex->image_ref;
        if (query.image_ref.empty()) {
            const KnowledgeRecord* record = dataset.find_record(ex->record_id);
            if (record) query.image_ref = record->image_ref;
        }

        try {
            AnswerResult answer =
                answer_query(store, embedder, generator, query, task, config, fusion);
            outcome.prediction = answer.text;
            for (const RankedCandidate& c : answer.retrieval.candidates) {
                outcome.retrieved.push_back(c.record_id);
                outcome.fused_scores.push_back(c.fused_score);
            }
            for (const std::string& w : answer.retrieval.warnings) warnings.insert(w);
            report.timings.retrieve_ms += answer.timings.retrieve_ms;
            report.timings.fuse_ms += answer.timings.fuse_ms;
            report.timings.generate_ms += answer.timings.generate_ms;
        } catch (const Error& e) {
            outcome.failed = true;
            outcome.error = e.what();  // already prefixed with the code name
        }

        auto t0 = Clock::now();
        ScoredItem item;
        item.candidate = tokenize(outcome.prediction);
        for (const std::string& g : ex->gold) item.references.push_back(tokenize(g));
        items.push_back(std::move(item));
        if (report.has_accuracy) {
            predictions.push_back(outcome.prediction);
            golds.push_back(ex->gold.front());
        }
        report.timings.score_ms += ms_since(t0);
        report.examples.push_back(std::move(outcome));
    }

    auto t0 = Clock::now();
    report.metrics = score_corpus(items);
    if (report.has_accuracy) report.accuracy = classification_accuracy(predictions, golds);
    report.timings.score_ms += ms_since(t0);

    std::size_t failures = 0;
    for (const auto& o : report.examples) failures += o.failed;
    if (failures > 0)
        warnings.insert(std::to_string(failures) + " example(s) failed and scored zero");
    report.warnings.assign(warnings.begin(), warnings.end());
    return report;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

json task_report_to_json(const TaskReport& report) {
    json examples = json::array();
    for (const ExampleOutcome& o : report.examples) {
        json row = {{"example_id", o.example_id},
                    {"prediction", o.prediction},
                    {"retrieved", o.retrieved},
                    {"fused_scores", o.fused_scores},
                    {"failed", o.failed}};
        if (o.failed) row["error"] = o.error;
        examples.push_back(std::move(row));
    }

    json out = {{"format_version", 1},
                {"task", std::string(task_label(report.task))},
                {"config", report.config.to_json()},
                {"config_hash", report.config.hash()},
                {"metrics", metric_report_to_json(report.metrics)},
                {"examples", std::move(examples)},
                {"warnings", report.warnings}};
    if (report.has_accuracy) {
        json per_class = json::object();
        for (const auto& [label, value] : report.accuracy.per_class)
            per_class[label] = std::stod(format_metric(value));
        out["accuracy"] = {{"overall", std::stod(format_metric(report.accuracy.overall))},
                           {"per_class", std::move(per_class)},
                           {"warning", report.accuracy.warning}};
    }
    return out;
}

TaskReport task_report_from_json(const json& j) {
    TaskReport report;
    report.task = task_from_label(j.at("task").get<std::string>());
    report.config = PipelineConfig::from_json(j.at("config"));
    report.metrics = metric_report_from_json(j.at("metrics"));
    if (j.contains("accuracy")) {
        report.has_accuracy = true;
        report.accuracy.overall = j["accuracy"].at("overall").get<double>();
        report.accuracy.warning = j["accuracy"].value("warning", false);
        for (const auto& [label, value] : j["accuracy"].at("per_class").items())
            report.accuracy.per_class[label] = value.get<double>();
    }
    for (const auto& row : j.at("examples")) {
        ExampleOutcome o;
        o.example_id = row.at("example_id").get<std::string>();
        o.prediction = row.at("prediction").get<std::string>();
        o.retrieved = row.at("retrieved").get<std::vector<std::string>>();
        o.fused_scores = row.at("fused_scores").get<std::vector<double>>();
        o.failed = row.at("failed").get<bool>();
        o.error = row.value("error", "");
        report.examples.push_back(std::move(o));
    }
    report.warnings = j.at("warnings").get<std::vector<std::string>>();
    return report;
}

namespace {

void append_metric_header(std::ostringstream& os, std::size_t label_width) {
    os << std::string(label_width, ' ');
    for (const std::string& name : metric_column_names()) {
        os << "  ";
        os.width(8);
        os << name;
    }
    os << '\n';
}

void append_metric_row(std::ostringstream& os, const std::string& label,
                       std::size_t label_width, const std::vector<double>& values,
                       const std::vector<double>* column_best) {
    os << label << std::string(label_width - label.size(), ' ');
    char buf[16];
    for (std::size_t i = 0; i < values.size(); ++i) {
        bool star = column_best && values[i] == (*column_best)[i];
        std::snprintf(buf, sizeof(buf), "%7.3f%c", values[i], star ? '*' : ' ');
        os << "  " << buf;
    }
    os << '\n';
}

}  // namespace

std::string render_task_report_text(const TaskReport& report) {
    std::ostringstream os;
    os << "task:        " << task_label(report.task) << '\n';
    os << "examples:    " << report.metrics.n_examples << '\n';
    os << "config_hash: " << report.config.hash() << '\n';
    os << "knowledge:   full record set\n";
    os << "meteor:      exact-match variant\n";

    if (report.metrics.n_examples == 0) {
        os << "\n== n=0: no examples evaluated ==\n";
    } else {
        os << '\n';
        const std::size_t label_width = 8;
        append_metric_header(os, label_width);
        append_metric_row(os, "all", label_width, metric_values(report.metrics), nullptr);
        if (report.has_accuracy) {
            os << "\naccuracy: " << format_metric(report.accuracy.overall) << " overall\n";
            for (const auto& [label, value] : report.accuracy.per_class)
                os << "  " << label << ": " << format_metric(value) << '\n';
        }
    }

    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "\ntimings(ms): retrieve %.1f  fuse %.1f  generate %.1f  score %.1f\n",
                  report.timings.retrieve_ms, report.timings.fuse_ms,
                  report.timings.generate_ms, report.timings.score_ms);
    os << buf;
    for (const std::string& w : report.warnings) os << "warning: " << w << '\n';
    return os.str();
}

void write_task_report(const TaskReport& report, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream out(dir / "report.json", std::ios::binary);
        if (!out) throw Error(ErrorCode::IoFailure, "cannot write report.json");
        out << task_report_to_json(report).dump(2) << '\n';
    }
    {
        std::ofstream out(dir / "report.txt", std::ios::binary);
        if (!out) throw Error(ErrorCode::IoFailure, "cannot write report.txt");
        out << render_task_report_text(report);
    }
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

SweepReport sweep(Task task, const Dataset& dataset, const VectorStore& store,
                  const PipelineConfig& base, const SweepGrid& grid,
                  const EmbeddingGateway& embedder, const GenerationGateway& generator,
                  const FusionClient* fusion) {
    if (grid.k_values.empty() || grid.alpha_values.empty())
        throw Error(ErrorCode::ConfigInvalid, "sweep grid must be non-empty on both axes");

    SweepReport report;
    report.task = task;
    report.grid = grid;
    report.base_config_hash = base.hash();

    json grid_json = {{"k", grid.k_values},
                      {"alpha", grid.alpha_values},
                      {"base", report.base_config_hash},
                      {"task", std::string(task_label(task))}};
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(detail::fnv1a64(grid_json.dump())));
    report.grid_hash = buf;

    for (std::size_t k : grid.k_values) {
        for (double alpha : grid.alpha_values) {
            PipelineConfig cell_config = base;
            cell_config.top_k = k;
            cell_config.alpha = alpha;
            SweepCellResult cell;
            cell.top_k = k;
            cell.alpha = alpha;
            cell.report =
                run_task(task, dataset, store, cell_config, embedder, generator, fusion);
            report.cells.push_back(std::move(cell));
        }
    }
    return report;
}

namespace {

std::string cell_label(const SweepReport& report, const SweepCellResult& cell) {
    const bool k_varies = report.grid.k_values.size() > 1;
    const bool alpha_varies = report.grid.alpha_values.size() > 1;
    std::string label;
    if (k_varies || !alpha_varies) label += "k=" + std::to_string(cell.top_k);
    if (alpha_varies) {
        if (!label.empty()) label += " ";
        label += "alpha=" + format_number(cell.alpha);
    }
    return label;
}

std::string join_numbers(const std::vector<double>& values) {
    std::string out;
    for (double v : values) {
        if (!out.empty()) out += ",";
        out += format_number(v);
    }
    return out;
}

}  // namespace

std::string render_sweep_summary(const SweepReport& report) {
    std::ostringstream os;
    os << "task: " << task_label(report.task) << '\n';
    std::string k_list;
    for (std::size_t k : report.grid.k_values) {
        if (!k_list.empty()) k_list += ",";
        k_list += std::to_string(k);
    }
    os << "grid: k={" << k_list << "} alpha={" << join_numbers(report.grid.alpha_values)
       << "}\n\n";

    std::size_t label_width = 4;
    for (const SweepCellResult& cell : report.cells)
        label_width = std::max(label_width, cell_label(report, cell).size());

    std::vector<double> best(metric_column_names().size(),
                             -std::numeric_limits<double>::infinity());
    for (const SweepCellResult& cell : report.cells) {
        std::vector<double> values = metric_values(cell.report.metrics);
        for (std::size_t i = 0; i < values.size(); ++i) best[i] = std::max(best[i], values[i]);
    }

    append_metric_header(os, label_width);
    for (const SweepCellResult& cell : report.cells)
        append_metric_row(os, cell_label(report, cell), label_width,
                          metric_values(cell.report.metrics), &best);
    return os.str();
}

json sweep_report_to_json(const SweepReport& report) {
    json rows = json::array();
    for (const SweepCellResult& cell : report.cells)
        rows.push_back({{"k", cell.top_k},
                        {"alpha", cell.alpha},
                        {"metrics", metric_report_to_json(cell.report.metrics)}});
    return {{"format_version", 1},
            {"task", std::string(task_label(report.task))},
            {"grid", {{"k", report.grid.k_values}, {"alpha", report.grid.alpha_values}}},
            {"grid_hash", report.grid_hash},
            {"base_config_hash", report.base_config_hash},
            {"rows", std::move(rows)}};
}

std::filesystem::path write_sweep_report(const SweepReport& report,
                                         const std::filesystem::path& out_root) {
    const std::filesystem::path dir =
        out_root / "sweeps" / std::string(task_label(report.task)) / report.grid_hash;
    std::filesystem::create_directories(dir);
    {
        std::ofstream out(dir / "summary.txt", std::ios::binary);
        if (!out) throw Error(ErrorCode::IoFailure, "cannot write summary.txt");
        out << render_sweep_summary(report);
    }
    {
        std::ofstream out(dir / "summary.json", std::ios::binary);
        if (!out) throw Error(ErrorCode::IoFailure, "cannot write summary.json");
        out << sweep_report_to_json(report).dump(2) << '\n';
    }
    for (const SweepCellResult& cell : report.cells) {
        std::string name = "k" + std::to_string(cell.top_k) + "_a" + format_number(cell.alpha);
        write_task_report(cell.report, dir / name);
    }
    return dir;
}

}  // namespace rsrag

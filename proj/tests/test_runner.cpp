#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <string>
#include <vector>

#include "rsrag/error.hpp"
#include "rsrag/ingest.hpp"
#include "rsrag/runner.hpp"
#include "test_support.hpp"

using namespace rsrag;
using nlohmann::json;

namespace {

// Six landmarks whose documents reduce to one distinctive details sentence,
// so a perfect retrieval round-trips the exact gold text through the echo
// generator. Categories are chosen so no label is a substring of another
// record's document.
const std::vector<std::string> kCats = {"Stadium", "Church",  "Tower",
                                        "Museum",  "Bridge",  "Casino"};

Dataset runner_dataset(bool with_category) {
    Dataset ds;
    for (std::size_t i = 0; i < kCats.size(); ++i) {
        KnowledgeRecord r;
        r.record_id = "rec-" + std::to_string(i);
        if (with_category) r.category = kCats[i];
        r.details = "Landmark number " + std::to_string(i) + " has signature token zx" +
                    std::to_string(100 + i * 37) + ".";
        r.image_ref = "img/" + r.record_id + ".png";
        ds.records.push_back(std::move(r));
    }
    return ds;
}

std::string doc_text(const Dataset& ds, std::size_t i) {
    return render_knowledge_document(ds.records[i]).text();
}

void add_example(Dataset& ds, const std::string& id, std::size_t record, Task task,
                 const std::string& query_text, const std::string& gold, Split split) {
    TaskExample ex;
    ex.example_id = id;
    ex.record_id = ds.records[record].record_id;
    ex.task = task;
    ex.image_ref = ds.records[record].image_ref;
    ex.query_text = query_text;
    ex.gold = {gold};
    ex.split = split;
    ds.examples.push_back(std::move(ex));
}

PipelineConfig small_config() {
    PipelineConfig config;
    config.embedder.dim = 32;
    config.tau = 6;
    config.top_k = 1;
    config.alpha = 0.5;
    config.exact_search = true;
    return config;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

struct Fixture {
    Dataset dataset;
    PipelineConfig config;
    EmbeddingGateway embedder;
    VectorStore store;

    explicit Fixture(Dataset ds, PipelineConfig cfg = small_config())
        : dataset(std::move(ds)),
          config(std::move(cfg)),
          embedder(config.embedder),
          store(build_store(dataset, config, embedder).store) {}
};

}  // namespace

TEST_CASE("answer_query fills prompt fields from the task preset") {
    Dataset ds = runner_dataset(false);
    add_example(ds, "cap-0", 0, Task::Captioning, doc_text(ds, 0), doc_text(ds, 0),
                Split::Test);
    Fixture fx(std::move(ds));
    GenerationGateway echo{GeneratorProfile{}};

    Query query;
    query.text = doc_text(fx.dataset, 0);
    query.image_ref = fx.dataset.records[0].image_ref;

    AnswerResult result =
        answer_query(fx.store, fx.embedder, echo, query, Task::Captioning, fx.config);
    CHECK(result.prompt.instruction ==
          "Describe this satellite image using the retrieved knowledge:");
    CHECK(result.prompt.knowledge_header == "Retrieved context:");
    CHECK(result.prompt.query_text == query.text);
    CHECK(result.text == result.prompt.context);  // echo identity
    REQUIRE(result.retrieval.candidates.size() == 1);
    CHECK(result.retrieval.candidates[0].record_id == "rec-0");
    CHECK(result.retrieval.candidates[0].fused_score == doctest::Approx(1.0));

    // Explicit instruction/header override the preset.
    PipelineConfig custom = fx.config;
    custom.instruction = "Say:";
    custom.knowledge_header = "Facts:";
    result = answer_query(fx.store, fx.embedder, echo, query, Task::Captioning, custom);
    CHECK(result.prompt.instruction == "Say:");
    CHECK(result.prompt.knowledge_header == "Facts:");
}

TEST_CASE("echo generator closes the loop on planted captions") {
    // Image-only queries, the classic captioning shape: the stored image
    // vector is found by its own reference, the top-1 context is the record's
    // whole document, and the echo generator returns it verbatim.
    Dataset ds = runner_dataset(false);
    for (std::size_t i = 0; i < ds.records.size(); ++i)
        add_example(ds, "cap-" + std::to_string(i), i, Task::Captioning, "",
                    doc_text(ds, i), Split::Test);
    PipelineConfig config = small_config();
    config.alpha = 0.9;
    Fixture fx(std::move(ds), config);
    GenerationGateway echo{GeneratorProfile{}};

    TaskReport report = run_task(Task::Captioning, fx.dataset, fx.store, fx.config,
                                 fx.embedder, echo);
    CHECK(report.metrics.n_examples == 6);
    CHECK(report.metrics.bleu1 == 1.0);
    CHECK(report.metrics.bleu4 == 1.0);
    CHECK(report.metrics.rouge_l == 1.0);
    CHECK_FALSE(report.has_accuracy);
    REQUIRE(report.examples.size() == 6);
    CHECK(report.examples[0].example_id == "cap-0");
    CHECK(report.examples[0].prediction == doc_text(fx.dataset, 0));
    CHECK(report.examples[0].retrieved == std::vector<std::string>{"rec-0"});
    CHECK_FALSE(report.examples[0].failed);

    // Text was absent from every query at alpha = 0.9, so retrieval warned.
    REQUIRE(report.warnings.size() == 1);
    CHECK(report.warnings[0] == "text missing from query; alpha forced to 1");
}

TEST_CASE("label generator scores planted classification at 1.0") {
    Dataset ds = runner_dataset(true);
    for (std::size_t i = 0; i < ds.records.size(); ++i)
        add_example(ds, "cls-" + std::to_string(i), i, Task::Classification,
                    doc_text(ds, i), kCats[i], Split::Test);
    Fixture fx(std::move(ds));
    GeneratorProfile profile;
    profile.kind = GeneratorKind::LabelMock;
    GenerationGateway labeler{profile};

    TaskReport report = run_task(Task::Classification, fx.dataset, fx.store, fx.config,
                                 fx.embedder, labeler);
    CHECK(report.has_accuracy);
    CHECK(report.accuracy.overall == 1.0);
    CHECK_FALSE(report.accuracy.warning);
    CHECK(report.accuracy.per_class.size() == kCats.size());
    for (const auto& [label, value] : report.accuracy.per_class) CHECK(value == 1.0);
    CHECK(report.examples[2].prediction == "Tower");
    CHECK(report.warnings.empty());
}

TEST_CASE("a task with no test examples reports a warning, not an error") {
    Dataset ds = runner_dataset(true);
    add_example(ds, "cls-train", 0, Task::Classification, doc_text(ds, 0), kCats[0],
                Split::Train);
    Fixture fx(std::move(ds));
    GenerationGateway echo{GeneratorProfile{}};

    TaskReport report = run_task(Task::Classification, fx.dataset, fx.store, fx.config,
                                 fx.embedder, echo);
    CHECK(report.metrics.n_examples == 0);
    CHECK(report.examples.empty());
    CHECK(report.accuracy.warning);
    REQUIRE(report.warnings.size() == 1);
    CHECK(report.warnings[0] == "test split has no examples for this task");
    CHECK(render_task_report_text(report).find("n=0") != std::string::npos);
}

TEST_CASE("a failing example scores zero without aborting the run") {
    Dataset ds = runner_dataset(false);
    for (std::size_t i = 0; i < 2; ++i)
        add_example(ds, "cap-" + std::to_string(i), i, Task::Captioning, doc_text(ds, i),
                    doc_text(ds, i), Split::Test);
    // Neither query text nor a resolvable image: retrieval raises EmptyInput.
    TaskExample broken;
    broken.example_id = "cap-broken";
    broken.record_id = "ghost";
    broken.task = Task::Captioning;
    broken.gold = {"anything"};
    broken.split = Split::Test;
    ds.examples.push_back(broken);
    Fixture fx(std::move(ds));
    GenerationGateway echo{GeneratorProfile{}};

    TaskReport report = run_task(Task::Captioning, fx.dataset, fx.store, fx.config,
                                 fx.embedder, echo);
    REQUIRE(report.examples.size() == 3);
    CHECK(report.metrics.n_examples == 3);
    const ExampleOutcome& failed = report.examples[2];
    CHECK(failed.example_id == "cap-broken");
    CHECK(failed.failed);
    CHECK(failed.prediction.empty());
    CHECK(failed.error.find("EmptyInput") != std::string::npos);
    // Two perfect items and one zero: the mean drops to exactly 2/3.
    CHECK(report.metrics.bleu1 == doctest::Approx(2.0 / 3.0));
    bool found = false;
    for (const std::string& w : report.warnings)
        found = found || w == "1 example(s) failed and scored zero";
    CHECK(found);
}

TEST_CASE("run_task validates its inputs") {
    Dataset ds = runner_dataset(false);
    Fixture fx(std::move(ds));
    GenerationGateway echo{GeneratorProfile{}};

    PipelineConfig bad = fx.config;
    bad.alpha = 1.5;
    CHECK_THROWS_AS(run_task(Task::Captioning, fx.dataset, fx.store, bad, fx.embedder, echo),
                    Error);

    VectorStore empty(32, HnswParams{});
    try {
        run_task(Task::Captioning, fx.dataset, empty, fx.config, fx.embedder, echo);
        FAIL("expected StoreEmpty");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::StoreEmpty);
    }
}

TEST_CASE("task reports serialize without timings and round-trip") {
    Dataset ds = runner_dataset(false);
    for (std::size_t i = 0; i < 3; ++i)
        add_example(ds, "cap-" + std::to_string(i), i, Task::Captioning, doc_text(ds, i),
                    doc_text(ds, i), Split::Test);
    Fixture fx(std::move(ds));
    GenerationGateway echo{GeneratorProfile{}};

    TaskReport report = run_task(Task::Captioning, fx.dataset, fx.store, fx.config,
                                 fx.embedder, echo);
    json j = task_report_to_json(report);
    CHECK(j.at("task") == "captioning");
    CHECK(j.at("config_hash") == fx.config.hash());
    CHECK_FALSE(j.contains("timings"));
    CHECK(j.dump().find("timing") == std::string::npos);
    CHECK(j.at("examples").size() == 3);
    CHECK_FALSE(j.contains("accuracy"));  // captioning has none

    TaskReport back = task_report_from_json(j);
    CHECK(task_report_to_json(back) == j);  // fixed point
    CHECK(back.task == Task::Captioning);
    CHECK(back.examples.size() == 3);
    CHECK(back.examples[1].example_id == "cap-1");

    // The rendered text does include wall-clock timings and the variant note.
    std::string text = render_task_report_text(report);
    CHECK(text.find("timings(ms): retrieve ") != std::string::npos);
    CHECK(text.find("meteor:      exact-match variant") != std::string::npos);
    CHECK(text.find("config_hash: " + fx.config.hash()) != std::string::npos);
}

TEST_CASE("equal runs produce byte-identical report.json") {
    Dataset ds = runner_dataset(true);
    for (std::size_t i = 0; i < ds.records.size(); ++i)
        add_example(ds, "cls-" + std::to_string(i), i, Task::Classification,
                    doc_text(ds, i), kCats[i], Split::Test);
    Fixture fx(std::move(ds));
    GeneratorProfile profile;
    profile.kind = GeneratorKind::LabelMock;
    GenerationGateway labeler{profile};

    TaskReport first = run_task(Task::Classification, fx.dataset, fx.store, fx.config,
                                fx.embedder, labeler);
    TaskReport second = run_task(Task::Classification, fx.dataset, fx.store, fx.config,
                                 fx.embedder, labeler);

    testsupport::TempDir tmp;
    write_task_report(first, tmp.path() / "a");
    write_task_report(second, tmp.path() / "b");
    CHECK(read_file(tmp.path() / "a" / "report.json") ==
          read_file(tmp.path() / "b" / "report.json"));
    CHECK_FALSE(read_file(tmp.path() / "a" / "report.json").empty());
}

TEST_CASE("sweep runs cells in K-major order and matches standalone runs") {
    Dataset ds = runner_dataset(false);
    for (std::size_t i = 0; i < ds.records.size(); ++i)
        add_example(ds, "cap-" + std::to_string(i), i, Task::Captioning, doc_text(ds, i),
                    doc_text(ds, i), Split::Test);
    Fixture fx(std::move(ds));
    GenerationGateway echo{GeneratorProfile{}};

    SweepGrid grid;
    grid.k_values = {1, 2};
    grid.alpha_values = {0.3, 0.7};
    SweepReport report = sweep(Task::Captioning, fx.dataset, fx.store, fx.config, grid,
                               fx.embedder, echo);

    REQUIRE(report.cells.size() == 4);
    CHECK(report.cells[0].top_k == 1);
    CHECK(report.cells[0].alpha == 0.3);
    CHECK(report.cells[1].top_k == 1);
    CHECK(report.cells[1].alpha == 0.7);
    CHECK(report.cells[2].top_k == 2);
    CHECK(report.cells[2].alpha == 0.3);
    CHECK(report.cells[3].top_k == 2);
    CHECK(report.cells[3].alpha == 0.7);
    CHECK(report.grid_hash.size() == 16);
    CHECK(report.base_config_hash == fx.config.hash());

    // A cell is exactly the same run performed alone.
    PipelineConfig standalone = fx.config;
    standalone.top_k = 2;
    standalone.alpha = 0.7;
    TaskReport alone = run_task(Task::Captioning, fx.dataset, fx.store, standalone,
                                fx.embedder, echo);
    CHECK(task_report_to_json(report.cells[3].report) == task_report_to_json(alone));

    // The grid hash is a pure function of grid + base config + task.
    SweepReport again = sweep(Task::Captioning, fx.dataset, fx.store, fx.config, grid,
                              fx.embedder, echo);
    CHECK(again.grid_hash == report.grid_hash);
    SweepGrid other = grid;
    other.alpha_values = {0.3, 0.9};
    CHECK(sweep(Task::Captioning, fx.dataset, fx.store, fx.config, other, fx.embedder, echo)
              .grid_hash != report.grid_hash);

    SweepGrid empty;
    CHECK_THROWS_AS(
        sweep(Task::Captioning, fx.dataset, fx.store, fx.config, empty, fx.embedder, echo),
        Error);
}

TEST_CASE("sweep summary labels adapt to the varying axes") {
    Dataset ds = runner_dataset(false);
    add_example(ds, "cap-0", 0, Task::Captioning, doc_text(ds, 0), doc_text(ds, 0),
                Split::Test);
    Fixture fx(std::move(ds));
    GenerationGateway echo{GeneratorProfile{}};

    auto run = [&](SweepGrid grid) {
        return render_sweep_summary(
            sweep(Task::Captioning, fx.dataset, fx.store, fx.config, grid, fx.embedder, echo));
    };

    std::string both = run({{1, 2}, {0.3, 0.7}});
    CHECK(both.find("task: captioning\n") != std::string::npos);
    CHECK(both.find("grid: k={1,2} alpha={0.3,0.7}\n") != std::string::npos);
    CHECK(both.find("k=1 alpha=0.3") != std::string::npos);
    CHECK(both.find("k=2 alpha=0.7") != std::string::npos);
    CHECK(both.find("BLEU-1") != std::string::npos);
    CHECK(both.find("CIDEr") != std::string::npos);
    CHECK(both.find('*') != std::string::npos);  // per-column best is starred

    std::string k_only = run({{1, 2}, {0.5}});
    CHECK(k_only.find("k=1") != std::string::npos);
    CHECK(k_only.find("k=2") != std::string::npos);
    CHECK(k_only.find("alpha=0") == std::string::npos);  // rows don't repeat a fixed alpha

    std::string alpha_only = run({{1}, {0.3, 0.7}});
    CHECK(alpha_only.find("alpha=0.3") != std::string::npos);
    CHECK(alpha_only.find("k=1 ") == std::string::npos);

    std::string single = run({{1}, {0.5}});
    CHECK(single.find("k=1") != std::string::npos);
}

TEST_CASE("write_sweep_report lays out one directory per cell") {
    Dataset ds = runner_dataset(false);
    add_example(ds, "cap-0", 0, Task::Captioning, doc_text(ds, 0), doc_text(ds, 0),
                Split::Test);
    Fixture fx(std::move(ds));
    GenerationGateway echo{GeneratorProfile{}};

    SweepGrid grid;
    grid.k_values = {1, 2};
    grid.alpha_values = {0.5};
    SweepReport report = sweep(Task::Captioning, fx.dataset, fx.store, fx.config, grid,
                               fx.embedder, echo);

    testsupport::TempDir tmp;
    std::filesystem::path dir = write_sweep_report(report, tmp.path());
    CHECK(dir == tmp.path() / "sweeps" / "captioning" / report.grid_hash);
    CHECK(std::filesystem::exists(dir / "summary.txt"));
    CHECK(std::filesystem::exists(dir / "summary.json"));
    for (const char* cell : {"k1_a0.5", "k2_a0.5"}) {
        CHECK(std::filesystem::exists(dir / cell / "report.json"));
        CHECK(std::filesystem::exists(dir / cell / "report.txt"));
    }
    CHECK(read_file(dir / "summary.txt") == render_sweep_summary(report));

    json summary = json::parse(read_file(dir / "summary.json"));
    CHECK(summary.at("grid_hash") == report.grid_hash);
    CHECK(summary.at("rows").size() == 2);
    CHECK(summary.at("rows")[0].at("k") == 1);
}

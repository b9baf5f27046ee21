#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace rsrag {

// ---------------------------------------------------------------------------
// Vocabulary
// ---------------------------------------------------------------------------

/// The 16 scene classes. Order is the canonical label order used in reports.
const std::vector<std::string>& category_labels();
bool is_valid_category(std::string_view label);

struct WorldFieldInfo {
    const char* id;     // snake_case key used in records.jsonl
    const char* title;  // section title in rendered documents
};

/// The 14 structured world-knowledge fields, in document order.
const std::vector<WorldFieldInfo>& world_knowledge_fields();

struct RsFieldInfo {
    const char* name;      // verbatim field name, e.g. "LST_Day_1km"
    bool monthly_allowed;  // false => Annual only
};

/// The 39 expert-derived remote-sensing variables, in document order.
const std::vector<RsFieldInfo>& rs_field_catalog();
const RsFieldInfo* find_rs_field(std::string_view name);

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

struct GeoPoint {
    double latitude = 0.0;
    double longitude = 0.0;
    bool operator==(const GeoPoint&) const = default;
};

struct RSVariable {
    std::variant<double, std::string> value;  // numeric, or categorical label
    std::string unit;                         // empty when dimensionless
    std::string temporal_resolution;          // "Annual" | "Monthly"
    std::string source;
    bool operator==(const RSVariable&) const = default;
};

/// One landmark: identifier, world-knowledge fields, remote-sensing variables
/// and an opaque image reference. Empty strings mean "unknown"; the field set
/// itself is always complete.
struct KnowledgeRecord {
    std::string record_id;
    std::string name;
    std::string category;
    std::string area;
    std::optional<GeoPoint> location;
    std::string address;
    std::string physical_area;
    std::string construction_period;
    std::string historical_background;
    std::string major_events;
    std::string architectural_characteristics;
    std::string cultural_significance;
    std::string primary_function;
    std::string notable_visitors;
    std::string details;
    std::map<std::string, RSVariable> rs_fields;
    std::string image_ref;
    bool operator==(const KnowledgeRecord&) const = default;
};

enum class Task { Captioning, Classification, VqaC, VqaRsk, VqaWk };
enum class Split { Train, Test };

/// Bit-exact task labels: captioning, classification, vqa_c, vqa_rsk, vqa_wk.
std::string_view task_label(Task task);
Task task_from_label(std::string_view label);
const std::vector<Task>& all_tasks();

std::string_view split_label(Split split);
Split split_from_label(std::string_view label);

struct TaskExample {
    std::string example_id;
    std::string record_id;
    Task task = Task::Captioning;
    std::string image_ref;
    std::string query_text;          // empty for pure captioning
    std::vector<std::string> gold;   // >= 1 reference strings
    Split split = Split::Train;
    bool operator==(const TaskExample&) const = default;
};

struct TaskStats {
    std::size_t total = 0;
    std::size_t train = 0;
    std::size_t test = 0;
    bool operator==(const TaskStats&) const = default;
};

struct Dataset {
    std::vector<KnowledgeRecord> records;
    std::vector<TaskExample> examples;

    const KnowledgeRecord* find_record(std::string_view record_id) const;
    std::map<Task, TaskStats> stats() const;
    bool operator==(const Dataset&) const = default;
};

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

struct ValidationReport {
    struct Violation {
        std::string field;
        std::string message;
    };
    std::vector<Violation> violations;
    bool ok() const { return violations.empty(); }
};

/// Checks the record invariants: known category, coordinate ranges, RS field
/// vocabulary and temporal resolutions. Violations are data, not faults.
ValidationReport validate_record(const KnowledgeRecord& record);

// ---------------------------------------------------------------------------
// Loading / writing (records.jsonl + tasks.jsonl)
// ---------------------------------------------------------------------------

/// Errors: MissingFile, SchemaViolation (with line and field),
/// DanglingReference. Duplicate record or example ids are rejected.
Dataset load_dataset(const std::filesystem::path& records_path,
                     const std::filesystem::path& tasks_path);

/// Convenience: expects `records.jsonl` and `tasks.jsonl` inside `dir`.
Dataset load_dataset(const std::filesystem::path& dir);

void write_dataset(const Dataset& dataset, const std::filesystem::path& records_path,
                   const std::filesystem::path& tasks_path);

// ---------------------------------------------------------------------------
// Splitting
// ---------------------------------------------------------------------------

struct SplitSpec {
    enum class Mode { Labels, Ratio };
    Mode mode = Mode::Labels;
    double train_ratio = 0.8;
    std::uint64_t seed = 0;

    static SplitSpec labels() { return {}; }
    static SplitSpec ratio(double train_ratio, std::uint64_t seed) {
        return {Mode::Ratio, train_ratio, seed};
    }
};

/// Partitions the examples (records are shared by both sides). Label mode
/// respects stored labels verbatim; ratio mode reassigns them with a
/// deterministic, category-stratified shuffle. Errors: InvalidRatio.
std::pair<Dataset, Dataset> split_dataset(const Dataset& dataset, const SplitSpec& spec);

// ---------------------------------------------------------------------------
// Document rendering
// ---------------------------------------------------------------------------

struct DocSection {
    std::string field;  // field id ("name", "details", "NDVI", ...)
    std::string text;   // "Title: value\n" — newline-terminated
};

/// Canonical text serialization of a record's knowledge: world fields first
/// (document order, non-empty only), then RS variables as
/// "Name: value unit (resolution, source)". Byte-identical for equal input.
struct KnowledgeDocument {
    std::string record_id;
    std::vector<DocSection> sections;

    std::string text() const;
    bool empty() const { return sections.empty(); }
};

KnowledgeDocument render_knowledge_document(const KnowledgeRecord& record);

/// Deterministic shortest-round-trip formatting for doubles (also used for
/// coordinates and RS values inside rendered documents).
std::string format_number(double value);

}  // namespace rsrag

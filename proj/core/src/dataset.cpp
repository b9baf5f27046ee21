#include "rsrag/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "rsrag/error.hpp"
#include "rng.hpp"

namespace rsrag {

using nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Vocabulary
// ---------------------------------------------------------------------------

const std::vector<std::string>& category_labels() {
    static const std::vector<std::string> labels = {
        "Airport",   "Amusement Park", "Beach",  "Bridge",  "Casino",  "Church",
        "Government Building", "Historic Site", "Mansion", "Museum",  "Park",
        "Stadium",   "Theater",        "Tower",  "University", "Forest",
    };
    return labels;
}

bool is_valid_category(std::string_view label) {
    const auto& all = category_labels();
    return std::find(all.begin(), all.end(), label) != all.end();
}

const std::vector<WorldFieldInfo>& world_knowledge_fields() {
    static const std::vector<WorldFieldInfo> fields = {
        {"name", "Name"},
        {"category", "Category"},
        {"area", "Area"},
        {"location", "Location"},
        {"address", "Address"},
        {"physical_area", "Physical Area"},
        {"construction_period", "Construction Period"},
        {"historical_background", "Historical Background"},
        {"major_events", "Major Events"},
        {"architectural_characteristics", "Architectural Characteristics"},
        {"cultural_significance", "Cultural Significance"},
        {"primary_function", "Primary Function"},
        {"notable_visitors", "Notable Visitors"},
        {"details", "Details"},
    };
    return fields;
}

const std::vector<RsFieldInfo>& rs_field_catalog() {
    static const std::vector<RsFieldInfo> fields = {
        {"Albedo", true},
        {"Albnirdf", true},
        {"Albnirdr", true},
        {"Albvisdf", true},
        {"Albvisdr", true},
        {"Emis", true},
        {"Evland", true},
        {"Gwetprof", true},
        {"LC_type1", false},
        {"LC_type2", false},
        {"LC_type3", false},
        {"LC_type4", false},
        {"LC_type5", false},
        {"LST_Day_1km", true},
        {"LST_Night_1km", true},
        {"Prectotland", true},
        {"Saa", false},
        {"Slp", true},
        {"Smland", true},
        {"Speed", true},
        {"Sr_b1", true},
        {"Sr_b2", true},
        {"Sr_b3", true},
        {"Sr_b4", true},
        {"Sr_b5", true},
        {"Sr_b6", true},
        {"Sr_b7", true},
        {"Ts", true},
        {"Ulml", true},
        {"Vaa", false},
        {"Vlml", true},
        {"Vza", false},
        {"Mean_2m_air_temperature", true},
        {"Mean_sea_level_pressure", true},
        {"Surface_pressure", true},
        {"Total_precipitation", true},
        {"NDVI", true},
        {"NDWI", true},
        {"NDBI", true},
    };
    return fields;
}

const RsFieldInfo* find_rs_field(std::string_view name) {
    for (const auto& f : rs_field_catalog())
        if (name == f.name) return &f;
    return nullptr;
}

// ---------------------------------------------------------------------------
// Labels
// ---------------------------------------------------------------------------

std::string_view task_label(Task task) {
    switch (task) {
        case Task::Captioning: return "captioning";
        case Task::Classification: return "classification";
        case Task::VqaC: return "vqa_c";
        case Task::VqaRsk: return "vqa_rsk";
        case Task::VqaWk: return "vqa_wk";
    }
    return "captioning";
}

Task task_from_label(std::string_view label) {
    for (Task t : all_tasks())
        if (label == task_label(t)) return t;
    throw Error(ErrorCode::SchemaViolation, "unknown task label: " + std::string(label));
}

const std::vector<Task>& all_tasks() {
    static const std::vector<Task> tasks = {Task::Captioning, Task::Classification,
                                            Task::VqaC, Task::VqaRsk, Task::VqaWk};
    return tasks;
}

std::string_view split_label(Split split) {
    return split == Split::Train ? "train" : "test";
}

Split split_from_label(std::string_view label) {
    if (label == "train") return Split::Train;
    if (label == "test") return Split::Test;
    throw Error(ErrorCode::SchemaViolation, "unknown split label: " + std::string(label));
}

// ---------------------------------------------------------------------------
// Dataset basics
// ---------------------------------------------------------------------------

const KnowledgeRecord* Dataset::find_record(std::string_view record_id) const {
    for (const auto& r : records)
        if (r.record_id == record_id) return &r;
    return nullptr;
}

std::map<Task, TaskStats> Dataset::stats() const {
    std::map<Task, TaskStats> out;
    for (Task t : all_tasks()) out[t] = {};
    for (const auto& ex : examples) {
        auto& s = out[ex.task];
        ++s.total;
        if (ex.split == Split::Train)
            ++s.train;
        else
            ++s.test;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

ValidationReport validate_record(const KnowledgeRecord& record) {
    ValidationReport report;
    auto add = [&](std::string field, std::string message) {
        report.violations.push_back({std::move(field), std::move(message)});
    };

    if (record.record_id.empty()) add("record_id", "must be non-empty");
    if (!record.category.empty() && !is_valid_category(record.category))
        add("category", "unknown category '" + record.category + "'");
    if (record.location) {
        if (record.location->latitude < -90.0 || record.location->latitude > 90.0)
            add("location.latitude", "out of range [-90, 90]");
        if (record.location->longitude < -180.0 || record.location->longitude > 180.0)
            add("location.longitude", "out of range [-180, 180]");
    }
    for (const auto& [name, var] : record.rs_fields) {
        const RsFieldInfo* info = find_rs_field(name);
        if (!info) {
            add("rs_fields." + name, "not in the field catalog");
            continue;
        }
        if (var.temporal_resolution != "Annual" &&
            !(info->monthly_allowed && var.temporal_resolution == "Monthly")) {
            add("rs_fields." + name + ".temporal_resolution",
                "'" + var.temporal_resolution + "' not allowed for " + name);
        }
    }
    return report;
}

// ---------------------------------------------------------------------------
// JSON conversion
// ---------------------------------------------------------------------------

namespace {

struct LineCtx {
    std::string file;
    std::size_t line = 0;

    [[noreturn]] void fail(const std::string& field, const std::string& what) const {
        std::ostringstream os;
        os << file << ":" << line << ": field '" << field << "': " << what;
        throw Error(ErrorCode::SchemaViolation, os.str());
    }
};

std::string get_string(const ordered_json& obj, const char* key, const LineCtx& ctx,
                       bool required = false) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) {
        if (required) ctx.fail(key, "missing");
        return {};
    }
    if (!it->is_string()) ctx.fail(key, "expected a string");
    std::string s = it->get<std::string>();
    if (required && s.empty()) ctx.fail(key, "must be non-empty");
    return s;
}

KnowledgeRecord record_from_json(const ordered_json& obj, const LineCtx& ctx) {
    KnowledgeRecord r;
    r.record_id = get_string(obj, "record_id", ctx, true);
    r.name = get_string(obj, "name", ctx);
    r.category = get_string(obj, "category", ctx);
    r.area = get_string(obj, "area", ctx);
    if (auto it = obj.find("location"); it != obj.end() && !it->is_null()) {
        if (!it->is_object() || !it->contains("latitude") || !it->contains("longitude") ||
            !(*it)["latitude"].is_number() || !(*it)["longitude"].is_number())
            ctx.fail("location", "expected {latitude, longitude} numbers or null");
        r.location = GeoPoint{(*it)["latitude"].get<double>(), (*it)["longitude"].get<double>()};
    }
    r.address = get_string(obj, "address", ctx);
    r.physical_area = get_string(obj, "physical_area", ctx);
    r.construction_period = get_string(obj, "construction_period", ctx);
    r.historical_background = get_string(obj, "historical_background", ctx);
    r.major_events = get_string(obj, "major_events", ctx);
    r.architectural_characteristics = get_string(obj, "architectural_characteristics", ctx);
    r.cultural_significance = get_string(obj, "cultural_significance", ctx);
    r.primary_function = get_string(obj, "primary_function", ctx);
    r.notable_visitors = get_string(obj, "notable_visitors", ctx);
    r.details = get_string(obj, "details", ctx);
    if (auto it = obj.find("rs_fields"); it != obj.end() && !it->is_null()) {
        if (!it->is_object()) ctx.fail("rs_fields", "expected an object");
        for (const auto& [name, body] : it->items()) {
            if (!body.is_object() || !body.contains("value"))
                ctx.fail("rs_fields." + name, "expected an object with 'value'");
            RSVariable var;
            const auto& value = body["value"];
            if (value.is_number())
                var.value = value.get<double>();
            else if (value.is_string())
                var.value = value.get<std::string>();
            else
                ctx.fail("rs_fields." + name + ".value", "expected number or string");
            var.unit = get_string(body, "unit", ctx);
            var.temporal_resolution = get_string(body, "temporal_resolution", ctx);
            var.source = get_string(body, "source", ctx);
            r.rs_fields.emplace(name, std::move(var));
        }
    }
    r.image_ref = get_string(obj, "image_ref", ctx);
    return r;
}

ordered_json record_to_json(const KnowledgeRecord& r) {
    ordered_json obj;
    obj["record_id"] = r.record_id;
    obj["name"] = r.name;
    obj["category"] = r.category;
    obj["area"] = r.area;
    if (r.location)
        obj["location"] = {{"latitude", r.location->latitude},
                           {"longitude", r.location->longitude}};
    else
        obj["location"] = nullptr;
    obj["address"] = r.address;
    obj["physical_area"] = r.physical_area;
    obj["construction_period"] = r.construction_period;
    obj["historical_background"] = r.historical_background;
    obj["major_events"] = r.major_events;
    obj["architectural_characteristics"] = r.architectural_characteristics;
    obj["cultural_significance"] = r.cultural_significance;
    obj["primary_function"] = r.primary_function;
    obj["notable_visitors"] = r.notable_visitors;
    obj["details"] = r.details;
    ordered_json rs = ordered_json::object();
    for (const auto& [name, var] : r.rs_fields) {
        ordered_json body;
        if (std::holds_alternative<double>(var.value))
            body["value"] = std::get<double>(var.value);
        else
            body["value"] = std::get<std::string>(var.value);
        body["unit"] = var.unit;
        body["temporal_resolution"] = var.temporal_resolution;
        body["source"] = var.source;
        rs[name] = std::move(body);
    }
    obj["rs_fields"] = std::move(rs);
    obj["image_ref"] = r.image_ref;
    return obj;
}

TaskExample example_from_json(const ordered_json& obj, const LineCtx& ctx) {
    TaskExample ex;
    ex.example_id = get_string(obj, "example_id", ctx, true);
    ex.record_id = get_string(obj, "record_id", ctx, true);
    try {
        ex.task = task_from_label(get_string(obj, "task", ctx, true));
        ex.split = split_from_label(get_string(obj, "split", ctx, true));
    } catch (const Error& e) {
        ctx.fail("task/split", e.what());
    }
    ex.image_ref = get_string(obj, "image_ref", ctx);
    ex.query_text = get_string(obj, "query_text", ctx);
    auto it = obj.find("gold");
    if (it == obj.end() || !it->is_array() || it->empty())
        ctx.fail("gold", "expected a non-empty array of strings");
    for (const auto& g : *it) {
        if (!g.is_string()) ctx.fail("gold", "expected a non-empty array of strings");
        ex.gold.push_back(g.get<std::string>());
    }
    return ex;
}

ordered_json example_to_json(const TaskExample& ex) {
    ordered_json obj;
    obj["example_id"] = ex.example_id;
    obj["record_id"] = ex.record_id;
    obj["task"] = std::string(task_label(ex.task));
    obj["image_ref"] = ex.image_ref;
    obj["query_text"] = ex.query_text;
    obj["gold"] = ex.gold;
    obj["split"] = std::string(split_label(ex.split));
    return obj;
}

}  // namespace

// ---------------------------------------------------------------------------
// Loading / writing
// ---------------------------------------------------------------------------

Dataset load_dataset(const std::filesystem::path& records_path,
                     const std::filesystem::path& tasks_path) {
    Dataset ds;
    std::unordered_set<std::string> record_ids;

    LineCtx ctx{records_path.filename().string()};
    {
        std::ifstream in(records_path);
        if (!in) throw Error(ErrorCode::MissingFile, "cannot open " + records_path.string());
        std::string line;
        while (std::getline(in, line)) {
            ++ctx.line;
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            ordered_json obj = ordered_json::parse(line, nullptr, false);
            if (obj.is_discarded() || !obj.is_object()) ctx.fail("<line>", "not a JSON object");
            KnowledgeRecord r = record_from_json(obj, ctx);
            if (!record_ids.insert(r.record_id).second)
                ctx.fail("record_id", "duplicate id '" + r.record_id + "'");
            ds.records.push_back(std::move(r));
        }
    }

    ctx = LineCtx{tasks_path.filename().string()};
    std::unordered_set<std::string> example_ids;
    {
        std::ifstream in(tasks_path);
        if (!in) throw Error(ErrorCode::MissingFile, "cannot open " + tasks_path.string());
        std::string line;
        while (std::getline(in, line)) {
            ++ctx.line;
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            ordered_json obj = ordered_json::parse(line, nullptr, false);
            if (obj.is_discarded() || !obj.is_object()) ctx.fail("<line>", "not a JSON object");
            TaskExample ex = example_from_json(obj, ctx);
            if (!example_ids.insert(ex.example_id).second)
                ctx.fail("example_id", "duplicate id '" + ex.example_id + "'");
            if (!record_ids.count(ex.record_id))
                throw Error(ErrorCode::DanglingReference,
                            "example '" + ex.example_id + "' references unknown record '" +
                                ex.record_id + "'");
            ds.examples.push_back(std::move(ex));
        }
    }
    return ds;
}

Dataset load_dataset(const std::filesystem::path& dir) {
    return load_dataset(dir / "records.jsonl", dir / "tasks.jsonl");
}

void write_dataset(const Dataset& dataset, const std::filesystem::path& records_path,
                   const std::filesystem::path& tasks_path) {
    {
        std::ofstream out(records_path, std::ios::binary);
        if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + records_path.string());
        for (const auto& r : dataset.records) out << record_to_json(r).dump() << '\n';
    }
    {
        std::ofstream out(tasks_path, std::ios::binary);
        if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + tasks_path.string());
        for (const auto& ex : dataset.examples) out << example_to_json(ex).dump() << '\n';
    }
}

// ---------------------------------------------------------------------------
// Splitting
// ---------------------------------------------------------------------------

std::pair<Dataset, Dataset> split_dataset(const Dataset& dataset, const SplitSpec& spec) {
    std::vector<bool> in_train(dataset.examples.size(), false);

    if (spec.mode == SplitSpec::Mode::Labels) {
        for (std::size_t i = 0; i < dataset.examples.size(); ++i)
            in_train[i] = dataset.examples[i].split == Split::Train;
    } else {
        if (!(spec.train_ratio > 0.0 && spec.train_ratio < 1.0))
            throw Error(ErrorCode::InvalidRatio,
                        "train ratio must lie in (0, 1), got " + format_number(spec.train_ratio));

        // Stratify on the referenced record's category so small classes keep
        // representation on both sides.
        std::map<std::string, std::vector<std::size_t>> groups;
        for (std::size_t i = 0; i < dataset.examples.size(); ++i) {
            const KnowledgeRecord* rec = dataset.find_record(dataset.examples[i].record_id);
            groups[rec ? rec->category : std::string()].push_back(i);
        }
        for (auto& [category, members] : groups) {
            std::sort(members.begin(), members.end(), [&](std::size_t a, std::size_t b) {
                return dataset.examples[a].example_id < dataset.examples[b].example_id;
            });
            detail::SplitMix64 rng(spec.seed ^ detail::fnv1a64(category));
            for (std::size_t i = members.size(); i > 1; --i)
                std::swap(members[i - 1], members[rng.next_below(i)]);
            auto n_train = static_cast<std::size_t>(
                std::llround(spec.train_ratio * static_cast<double>(members.size())));
            n_train = std::min(n_train, members.size());
            for (std::size_t i = 0; i < n_train; ++i) in_train[members[i]] = true;
        }
    }

    Dataset train{dataset.records, {}};
    Dataset test{dataset.records, {}};
    for (std::size_t i = 0; i < dataset.examples.size(); ++i) {
        TaskExample ex = dataset.examples[i];
        ex.split = in_train[i] ? Split::Train : Split::Test;
        (in_train[i] ? train : test).examples.push_back(std::move(ex));
    }
    return {std::move(train), std::move(test)};
}

// ---------------------------------------------------------------------------
// Document rendering
// ---------------------------------------------------------------------------

std::string format_number(double value) {
    return nlohmann::json(value).dump();
}

KnowledgeDocument render_knowledge_document(const KnowledgeRecord& record) {
    KnowledgeDocument doc;
    doc.record_id = record.record_id;

    auto add = [&](const char* field, const std::string& title, const std::string& value) {
        if (value.empty()) return;
        doc.sections.push_back({field, title + ": " + value + "\n"});
    };

    const std::string* scalar_fields[] = {
        &record.name,
        &record.category,
        &record.area,
        nullptr,  // location, handled below
        &record.address,
        &record.physical_area,
        &record.construction_period,
        &record.historical_background,
        &record.major_events,
        &record.architectural_characteristics,
        &record.cultural_significance,
        &record.primary_function,
        &record.notable_visitors,
        &record.details,
    };
    const auto& fields = world_knowledge_fields();
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (scalar_fields[i]) {
            add(fields[i].id, fields[i].title, *scalar_fields[i]);
        } else if (record.location) {
            add(fields[i].id, fields[i].title,
                format_number(record.location->latitude) + ", " +
                    format_number(record.location->longitude));
        }
    }

    for (const auto& info : rs_field_catalog()) {
        auto it = record.rs_fields.find(info.name);
        if (it == record.rs_fields.end()) continue;
        const RSVariable& var = it->second;
        std::string value = std::holds_alternative<double>(var.value)
                                ? format_number(std::get<double>(var.value))
                                : std::get<std::string>(var.value);
        if (!var.unit.empty()) value += " " + var.unit;
        std::string tail = var.source.empty() ? var.temporal_resolution
                                              : var.temporal_resolution + ", " + var.source;
        doc.sections.push_back({info.name, std::string(info.name) + ": " + value + " (" +
                                               tail + ")\n"});
    }
    return doc;
}

std::string KnowledgeDocument::text() const {
    std::string out;
    for (const auto& s : sections) out += s.text;
    return out;
}

}  // namespace rsrag

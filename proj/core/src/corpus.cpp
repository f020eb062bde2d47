#include "riskdisc/corpus.hpp"

#include "riskdisc/error.hpp"
#include "riskdisc/text.hpp"

#include <json.hpp>

#include <fstream>
#include <functional>
#include <sstream>
#include <unordered_map>

namespace riskdisc {

namespace {

using ordered_json = nlohmann::ordered_json;

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return in;
}

bool is_blank(std::string_view line) {
  return line.find_first_not_of(" \t\r\n") == std::string_view::npos;
}

// Calls `on_object(obj, line_no)` for every non-blank line.
void for_each_object(std::istream& in, std::string_view source,
                     const std::function<void(const ordered_json&, std::size_t)>& on_object) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank(line)) continue;
    ordered_json obj;
    try {
      obj = ordered_json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(std::string(source), line_no, std::string("invalid JSON: ") + e.what());
    }
    if (!obj.is_object()) {
      throw ParseError(std::string(source), line_no, "expected a JSON object");
    }
    on_object(obj, line_no);
  }
}

class LineFields {
 public:
  LineFields(const ordered_json& obj, std::string_view source, std::size_t line)
      : obj_(obj), source_(source), line_(line) {}

  std::string required(const char* key, bool non_empty) const {
    const auto it = obj_.find(key);
    if (it == obj_.end()) fail(std::string("missing field \"") + key + "\"");
    if (!it->is_string()) fail(std::string("field \"") + key + "\" must be a string");
    auto value = it->get<std::string>();
    if (non_empty && normalize_text(value).empty()) {
      fail(std::string("field \"") + key + "\" is blank");
    }
    return value;
  }

  std::string optional(const char* key) const {
    const auto it = obj_.find(key);
    if (it == obj_.end() || it->is_null()) return {};
    if (!it->is_string()) fail(std::string("field \"") + key + "\" must be a string");
    return it->get<std::string>();
  }

  [[noreturn]] void fail(const std::string& reason) const {
    throw ParseError(std::string(source_), line_, reason);
  }

  const ordered_json& object() const { return obj_; }

 private:
  const ordered_json& obj_;
  std::string_view source_;
  std::size_t line_;
};

// Tracks first-seen line per id and rejects repeats.
class UniqueIds {
 public:
  UniqueIds(std::string_view source, const char* what) : source_(source), what_(what) {}

  void insert(const std::string& id, std::size_t line) {
    const auto [it, inserted] = first_line_.emplace(id, line);
    if (!inserted) {
      throw ParseError(std::string(source_), line,
                       std::string("duplicate ") + what_ + " \"" + id + "\" (first seen on line " +
                           std::to_string(it->second) + ")");
    }
  }

 private:
  std::string_view source_;
  const char* what_;
  std::unordered_map<std::string, std::size_t> first_line_;
};

template <typename T>
std::string join_lines(std::span<const T> items, const std::function<ordered_json(const T&)>& to_obj) {
  std::string out;
  for (const auto& item : items) {
    out += to_obj(item).dump();
    out += '\n';
  }
  return out;
}

}  // namespace

std::string read_file(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<ProjectRecord> load_projects(std::istream& in, std::string_view source) {
  std::vector<ProjectRecord> records;
  UniqueIds ids(source, "project id");
  for_each_object(in, source, [&](const ordered_json& obj, std::size_t line) {
    LineFields f(obj, source, line);
    ProjectRecord r;
    r.id = f.required("id", true);
    r.name = f.optional("name");
    const auto it = obj.find("fields");
    if (it == obj.end()) f.fail("missing field \"fields\"");
    if (!it->is_object()) f.fail("field \"fields\" must be an object");
    bool any_text = false;
    for (const auto& [key, value] : it->items()) {
      if (!value.is_string()) f.fail("fields.\"" + key + "\" must be a string");
      auto text = value.get<std::string>();
      any_text = any_text || !normalize_text(text).empty();
      r.fields.emplace_back(key, std::move(text));
    }
    if (!any_text) f.fail("project \"" + r.id + "\" has no non-empty field");
    ids.insert(r.id, line);
    records.push_back(std::move(r));
  });
  return records;
}

std::vector<ProjectRecord> load_projects(const std::filesystem::path& path) {
  auto in = open_input(path);
  return load_projects(in, path.string());
}

std::vector<RawRisk> load_raw_risks(std::istream& in, std::string_view source) {
  std::vector<RawRisk> risks;
  UniqueIds ids(source, "risk_id");
  for_each_object(in, source, [&](const ordered_json& obj, std::size_t line) {
    LineFields f(obj, source, line);
    if (obj.contains("curated_id")) f.fail("curated-risk record in a raw-risk file");
    RawRisk r{f.required("risk_id", true), f.required("project_id", true),
              f.required("text", true)};
    ids.insert(r.risk_id, line);
    risks.push_back(std::move(r));
  });
  return risks;
}

std::vector<RawRisk> load_raw_risks(const std::filesystem::path& path) {
  auto in = open_input(path);
  return load_raw_risks(in, path.string());
}

std::vector<CuratedRisk> load_curated_risks(std::istream& in, std::string_view source) {
  std::vector<CuratedRisk> risks;
  UniqueIds ids(source, "curated_id");
  for_each_object(in, source, [&](const ordered_json& obj, std::size_t line) {
    LineFields f(obj, source, line);
    if (obj.contains("project_id")) f.fail("raw-risk record in a curated-risk file");
    CuratedRisk r{f.required("curated_id", true), f.required("risk", true),
                  f.optional("mitigation")};
    ids.insert(r.curated_id, line);
    risks.push_back(std::move(r));
  });
  return risks;
}

std::vector<CuratedRisk> load_curated_risks(const std::filesystem::path& path) {
  auto in = open_input(path);
  return load_curated_risks(in, path.string());
}

RiskCollection load_risks(const std::filesystem::path& path, RiskKind kind) {
  if (kind == RiskKind::raw) return load_raw_risks(path);
  return load_curated_risks(path);
}

std::vector<ParallelPair> load_parallel_corpus(std::istream& in, std::string_view source) {
  std::vector<ParallelPair> pairs;
  for_each_object(in, source, [&](const ordered_json& obj, std::size_t line) {
    LineFields f(obj, source, line);
    pairs.push_back({f.required("raw", true), f.required("curated", true)});
  });
  return pairs;
}

std::vector<ParallelPair> load_parallel_corpus(const std::filesystem::path& path) {
  auto in = open_input(path);
  return load_parallel_corpus(in, path.string());
}

std::string to_jsonl(std::span<const ProjectRecord> records) {
  return join_lines<ProjectRecord>(records, [](const ProjectRecord& r) {
    ordered_json fields = ordered_json::object();
    for (const auto& [k, v] : r.fields) fields[k] = v;
    return ordered_json{{"id", r.id}, {"name", r.name}, {"fields", std::move(fields)}};
  });
}

std::string to_jsonl(std::span<const RawRisk> risks) {
  return join_lines<RawRisk>(risks, [](const RawRisk& r) {
    return ordered_json{{"risk_id", r.risk_id}, {"project_id", r.project_id}, {"text", r.text}};
  });
}

std::string to_jsonl(std::span<const CuratedRisk> risks) {
  return join_lines<CuratedRisk>(risks, [](const CuratedRisk& r) {
    return ordered_json{
        {"curated_id", r.curated_id}, {"risk", r.risk_text}, {"mitigation", r.mitigation_text}};
  });
}

std::string to_jsonl(std::span<const ParallelPair> pairs) {
  return join_lines<ParallelPair>(pairs, [](const ParallelPair& p) {
    return ordered_json{{"raw", p.raw_text}, {"curated", p.curated_text}};
  });
}

std::string assemble_text(const ProjectRecord& record) {
  std::string joined;
  bool any_field = false;
  auto append = [&](std::string_view part) {
    auto norm = normalize_text(part);
    if (norm.empty()) return false;
    if (!joined.empty()) joined += ". ";
    joined += norm;
    return true;
  };
  append(record.name);
  for (const auto& [key, value] : record.fields) {
    any_field = append(value) || any_field;
  }
  if (!any_field) {
    throw DataError("project \"" + record.id + "\" has no non-empty field; profile would be vacuous");
  }
  return joined;
}

}  // namespace riskdisc

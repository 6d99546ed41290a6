#include "sqakit/config.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <variant>

#include <nlohmann/json.hpp>

#include "sqakit/io.hpp"
#include "sqakit/prompting.hpp"

namespace sqakit::config {

namespace fs = std::filesystem;

Mode mode_from_string(std::string_view s) {
    if (s == "single") return Mode::Single;
    if (s == "vote") return Mode::Vote;
    if (s == "crossval") return Mode::CrossVal;
    throw ConfigError("unknown mode: " + std::string(s));
}

std::string_view to_string(Mode mode) {
    switch (mode) {
        case Mode::Single: return "single";
        case Mode::Vote: return "vote";
        case Mode::CrossVal: return "crossval";
    }
    return "unknown";
}

namespace {

// ---------------------------------------------------------------------------
// Minimal TOML-style reader: key = value pairs, [table] headers, [[array]]
// table headers, string/int/float/bool scalars and flat arrays. Enough for
// the documented config format; not a general TOML implementation.

using Value = std::variant<std::string, int64_t, double, bool, std::vector<std::string>>;
using Table = std::map<std::string, Value>;

struct ParsedConfig {
    Table root;
    std::map<std::string, std::vector<Table>> table_arrays;
};

[[noreturn]] void fail(int line_no, const std::string& message) {
    throw ConfigError("config line " + std::to_string(line_no) + ": " + message);
}

std::string strip_comment(const std::string& line) {
    bool in_string = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (c == '"' && (i == 0 || line[i - 1] != '\\')) in_string = !in_string;
        if (c == '#' && !in_string) return line.substr(0, i);
    }
    return line;
}

std::string parse_string_literal(const std::string& raw, int line_no) {
    if (raw.size() < 2 || raw.front() != '"' || raw.back() != '"') {
        fail(line_no, "expected a double-quoted string: " + raw);
    }
    std::string out;
    for (std::size_t i = 1; i + 1 < raw.size(); ++i) {
        if (raw[i] == '\\' && i + 2 < raw.size()) {
            ++i;
            switch (raw[i]) {
                case 'n': out += '\n'; break;
                case 't': out += '\t'; break;
                case '"': out += '"'; break;
                case '\\': out += '\\'; break;
                default: fail(line_no, std::string("unsupported escape \\") + raw[i]);
            }
        } else {
            out += raw[i];
        }
    }
    return out;
}

Value parse_value(const std::string& raw, int line_no) {
    if (raw.empty()) fail(line_no, "empty value");
    if (raw.front() == '"') return parse_string_literal(raw, line_no);
    if (raw == "true") return true;
    if (raw == "false") return false;
    if (raw.front() == '[') {
        if (raw.back() != ']') fail(line_no, "unterminated array");
        std::vector<std::string> items;
        std::string body = raw.substr(1, raw.size() - 2);
        std::size_t pos = 0;
        while (pos < body.size()) {
            while (pos < body.size() && std::isspace(static_cast<unsigned char>(body[pos]))) ++pos;
            if (pos >= body.size()) break;
            std::size_t end;
            if (body[pos] == '"') {
                end = body.find('"', pos + 1);
                while (end != std::string::npos && body[end - 1] == '\\') end = body.find('"', end + 1);
                if (end == std::string::npos) fail(line_no, "unterminated string in array");
                items.push_back(parse_string_literal(body.substr(pos, end - pos + 1), line_no));
                pos = end + 1;
            } else {
                end = body.find(',', pos);
                const std::string item =
                    trim(body.substr(pos, end == std::string::npos ? std::string::npos : end - pos));
                if (!item.empty()) items.push_back(item);
                pos = end == std::string::npos ? body.size() : end;
            }
            while (pos < body.size() && (std::isspace(static_cast<unsigned char>(body[pos])) || body[pos] == ',')) ++pos;
        }
        return items;
    }
    // Numeric scalar.
    try {
        if (raw.find('.') != std::string::npos || raw.find('e') != std::string::npos ||
            raw.find('E') != std::string::npos) {
            std::size_t used = 0;
            const double d = std::stod(raw, &used);
            if (used != raw.size()) fail(line_no, "malformed number: " + raw);
            return d;
        }
        std::size_t used = 0;
        const int64_t n = std::stoll(raw, &used, 10);
        if (used != raw.size()) fail(line_no, "malformed integer: " + raw);
        return n;
    } catch (const std::exception&) {
        fail(line_no, "unrecognized value: " + raw);
    }
}

ParsedConfig parse_toml_subset(const std::string& content) {
    ParsedConfig parsed;
    Table* current = &parsed.root;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= content.size()) {
        const std::size_t nl = content.find('\n', pos);
        std::string line = content.substr(pos, nl == std::string::npos ? std::string::npos : nl - pos);
        pos = nl == std::string::npos ? content.size() + 1 : nl + 1;
        ++line_no;

        line = trim(strip_comment(line));
        if (line.empty()) continue;

        if (line.rfind("[[", 0) == 0) {
            if (line.size() < 5 || line.substr(line.size() - 2) != "]]") {
                fail(line_no, "malformed table array header: " + line);
            }
            const std::string name = trim(line.substr(2, line.size() - 4));
            parsed.table_arrays[name].emplace_back();
            current = &parsed.table_arrays[name].back();
            continue;
        }
        if (line.front() == '[') {
            if (line.back() != ']') fail(line_no, "malformed table header: " + line);
            // Plain tables are accepted but flattened into the root with a
            // "name." key prefix; the documented format does not need them.
            current = &parsed.root;
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) fail(line_no, "expected key = value: " + line);
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) fail(line_no, "empty key");
        (*current)[key] = parse_value(value, line_no);
    }
    return parsed;
}

template <typename T>
std::optional<T> get(const Table& table, const std::string& key) {
    const auto it = table.find(key);
    if (it == table.end()) return std::nullopt;
    if constexpr (std::is_same_v<T, int>) {
        if (const auto* v = std::get_if<int64_t>(&it->second)) return static_cast<int>(*v);
    } else if constexpr (std::is_same_v<T, uint64_t>) {
        if (const auto* v = std::get_if<int64_t>(&it->second)) return static_cast<uint64_t>(*v);
    } else if constexpr (std::is_same_v<T, double>) {
        if (const auto* v = std::get_if<double>(&it->second)) return *v;
        if (const auto* v = std::get_if<int64_t>(&it->second)) return static_cast<double>(*v);
    } else {
        if (const auto* v = std::get_if<T>(&it->second)) return *v;
    }
    throw ConfigError("config key '" + key + "' has the wrong type");
}

fs::path resolve(const fs::path& base, const std::string& path) {
    const fs::path p(path);
    return p.is_absolute() ? p : base / p;
}

} // namespace

RunConfig load_config_file(const fs::path& path) {
    const ParsedConfig parsed = parse_toml_subset(io::read_file(path));
    const fs::path base = path.has_parent_path() ? path.parent_path() : fs::path(".");
    const Table& root = parsed.root;

    RunConfig cfg;
    if (const auto v = get<std::string>(root, "task")) cfg.task = task_from_string(*v);
    if (const auto v = get<std::string>(root, "mode")) cfg.mode = mode_from_string(*v);
    if (const auto v = get<std::string>(root, "corpus")) cfg.corpus = resolve(base, *v);
    if (const auto v = get<bool>(root, "cot")) cfg.cot = *v;
    if (const auto v = get<uint64_t>(root, "seed")) cfg.seed = *v;
    if (const auto v = get<std::string>(root, "cache")) {
        cfg.cache_mode = gateway::cache_mode_from_string(*v);
    }
    if (const auto v = get<std::string>(root, "cache_dir")) cfg.cache_dir = resolve(base, *v);
    if (const auto v = get<std::string>(root, "out")) cfg.out_dir = resolve(base, *v);
    if (const auto v = get<int>(root, "parallelism")) cfg.parallelism = *v;
    if (const auto v = get<std::string>(root, "label")) cfg.label = *v;
    if (const auto v = get<std::string>(root, "template_version")) cfg.template_version_pin = *v;
    if (const auto v = get<std::string>(root, "embedding_provider")) cfg.embedding_provider = *v;
    if (const auto v = get<int>(root, "validation_rounds")) cfg.validation_rounds = *v;
    if (const auto v = get<int>(root, "top_hints")) cfg.top_hints = *v;
    if (const auto v = get<std::vector<std::string>>(root, "priority")) cfg.priority = *v;

    const auto models = parsed.table_arrays.find("model");
    if (models != parsed.table_arrays.end()) {
        for (const Table& t : models->second) {
            gateway::ModelConfig m;
            if (const auto v = get<std::string>(t, "id")) m.model_id = *v;
            if (const auto v = get<std::string>(t, "provider")) m.provider = *v;
            if (const auto v = get<std::string>(t, "endpoint")) m.endpoint = *v;
            if (const auto v = get<std::string>(t, "auth_env")) m.auth_env = *v;
            if (const auto v = get<int>(t, "priority_rank")) m.priority_rank = *v;
            if (const auto v = get<std::string>(t, "script")) m.script = resolve(base, *v).string();
            const auto temperature = get<double>(t, "temperature");
            const auto max_tokens = get<int>(t, "max_tokens");
            if (temperature || max_tokens) {
                prompting::GenerationParams p;
                if (temperature) p.temperature = *temperature;
                if (max_tokens) p.max_tokens = *max_tokens;
                m.params_override = p;
            }
            cfg.models.push_back(std::move(m));
        }
    }
    const auto pairs = parsed.table_arrays.find("pair");
    if (pairs != parsed.table_arrays.end()) {
        for (const Table& t : pairs->second) {
            CrossValPair p;
            if (const auto v = get<std::string>(t, "left")) p.left = *v;
            if (const auto v = get<std::string>(t, "right")) p.right = *v;
            cfg.pairs.push_back(std::move(p));
        }
    }
    return cfg;
}

std::vector<std::string> resolved_priority(const RunConfig& config) {
    if (!config.priority.empty()) return config.priority;
    std::vector<const gateway::ModelConfig*> sorted;
    sorted.reserve(config.models.size());
    for (const gateway::ModelConfig& m : config.models) sorted.push_back(&m);
    std::sort(sorted.begin(), sorted.end(), [](const auto* a, const auto* b) {
        return a->priority_rank < b->priority_rank;
    });
    std::vector<std::string> out;
    out.reserve(sorted.size());
    for (const auto* m : sorted) out.push_back(m->model_id);
    return out;
}

void validate(const RunConfig& config) {
    if (config.models.empty()) throw ConfigError("no models configured");
    std::set<std::string> ids;
    std::set<int> ranks;
    for (const gateway::ModelConfig& m : config.models) {
        if (m.model_id.empty()) throw ConfigError("model with empty id");
        if (!ids.insert(m.model_id).second) throw ConfigError("duplicate model id: " + m.model_id);
        if (!ranks.insert(m.priority_rank).second) {
            throw ConfigError("duplicate priority_rank for model " + m.model_id);
        }
        if (m.provider == "mock" && m.script.empty()) {
            throw ConfigError("mock model " + m.model_id + " needs a script path");
        }
    }
    const std::vector<std::string> priority = resolved_priority(config);
    if (priority.size() != config.models.size()) {
        throw ConfigError("priority order must list every model exactly once");
    }
    std::set<std::string> priority_set(priority.begin(), priority.end());
    if (priority_set.size() != priority.size()) throw ConfigError("priority order repeats a model");
    for (const std::string& id : priority) {
        if (ids.count(id) == 0) throw ConfigError("priority order names unknown model: " + id);
    }
    for (const CrossValPair& p : config.pairs) {
        if (ids.count(p.left) == 0 || ids.count(p.right) == 0) {
            throw ConfigError("crossval pair references unknown model: " + p.left + " <= " + p.right);
        }
        if (p.left == p.right) throw ConfigError("crossval pair must use two distinct models");
    }
    if (config.mode == Mode::CrossVal && config.pairs.empty()) {
        throw ConfigError("crossval mode needs at least one pair");
    }
    if (config.corpus.empty()) throw ConfigError("no corpus path configured");
    if (config.parallelism < 1) throw ConfigError("parallelism must be >= 1");
    if (config.validation_rounds < 1) throw ConfigError("validation_rounds must be >= 1");
    if (config.top_hints < 1) throw ConfigError("top_hints must be >= 1");
    if (!config.template_version_pin.empty() &&
        config.template_version_pin != prompting::kTemplateVersion) {
        throw ConfigError("config pins template_version " + config.template_version_pin +
                          " but this build provides " + prompting::kTemplateVersion);
    }
}

nlohmann::json config_snapshot(const RunConfig& config) {
    nlohmann::ordered_json j;
    j["task"] = std::string(to_string(config.task));
    j["mode"] = std::string(to_string(config.mode));
    j["corpus"] = config.corpus.string();
    j["label"] = config.label;
    j["seed"] = config.seed;
    j["cot"] = config.cot;
    j["cache"] = std::string(to_string(config.cache_mode));
    j["cache_dir"] = config.cache_dir.string();
    j["out"] = config.out_dir.string();
    j["parallelism"] = config.parallelism;
    j["embedding_provider"] = config.embedding_provider;
    j["validation_rounds"] = config.validation_rounds;
    j["top_hints"] = config.top_hints;
    j["template_version"] = prompting::kTemplateVersion;
    j["priority"] = resolved_priority(config);
    nlohmann::ordered_json models = nlohmann::ordered_json::array();
    for (const gateway::ModelConfig& m : config.models) {
        nlohmann::ordered_json mj;
        mj["id"] = m.model_id;
        mj["provider"] = m.provider;
        mj["endpoint"] = m.endpoint;
        mj["auth_env"] = m.auth_env; // the variable name only, never its value
        mj["priority_rank"] = m.priority_rank;
        if (!m.script.empty()) mj["script"] = m.script;
        if (m.params_override) {
            mj["temperature"] = m.params_override->temperature;
            mj["max_tokens"] = m.params_override->max_tokens;
        }
        models.push_back(std::move(mj));
    }
    j["models"] = std::move(models);
    nlohmann::ordered_json pairs = nlohmann::ordered_json::array();
    for (const CrossValPair& p : config.pairs) {
        pairs.push_back({{"left", p.left}, {"right", p.right}});
    }
    j["pairs"] = std::move(pairs);
    return j;
}

} // namespace sqakit::config

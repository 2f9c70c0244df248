#include "pfdiff/grid/case_parser.h"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "pfdiff/common/error.h"

namespace pfdiff::grid {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

struct Row {
    std::vector<double> values;
    std::size_t line = 0;
};

struct Table {
    std::vector<Row> rows;
    std::size_t line = 0;
};

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

double parse_number(std::string_view token, std::size_t line) {
    if (token == "Inf" || token == "inf") return std::numeric_limits<double>::infinity();
    if (token == "-Inf" || token == "-inf") return -std::numeric_limits<double>::infinity();
    double value = 0.0;
    const char* first = token.data();
    if (!token.empty() && token.front() == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, token.data() + token.size(), value);
    if (ec != std::errc() || ptr != token.data() + token.size())
        throw ParseError("invalid number '" + std::string(token) + "'", line);
    return value;
}

/// Minimal reader for the subset of MATLAB syntax used by MATPOWER case files.
class MatpowerReader {
  public:
    explicit MatpowerReader(std::string_view text) {
        std::size_t line = 1;
        std::size_t start = 0;
        for (std::size_t i = 0; i <= text.size(); ++i) {
            if (i == text.size() || text[i] == '\n') {
                std::string_view raw = text.substr(start, i - start);
                if (auto pct = raw.find('%'); pct != std::string_view::npos) raw = raw.substr(0, pct);
                lines_.push_back({std::string(raw), line});
                ++line;
                start = i + 1;
            }
        }
        scan();
    }

    std::optional<double> scalar(const std::string& name) const {
        auto it = scalars_.find(name);
        if (it == scalars_.end()) return std::nullopt;
        return it->second;
    }

    const Table* table(const std::string& name) const {
        auto it = tables_.find(name);
        return it == tables_.end() ? nullptr : &it->second;
    }

  private:
    struct Line {
        std::string text;
        std::size_t number;
    };

    void scan() {
        for (std::size_t i = 0; i < lines_.size(); ++i) {
            std::string_view body = trim(lines_[i].text);
            if (body.rfind("mpc.", 0) != 0) continue;
            const auto eq = body.find('=');
            if (eq == std::string_view::npos) throw ParseError("expected '=' after field name", lines_[i].number);
            const std::string name(trim(body.substr(4, eq - 4)));
            std::string_view rhs = trim(body.substr(eq + 1));
            if (!rhs.empty() && rhs.front() == '[') {
                i = read_table(name, i, rhs.substr(1));
            } else if (!rhs.empty() && rhs.front() == '\'') {
                continue;  // string fields such as mpc.version
            } else {
                if (!rhs.empty() && rhs.back() == ';') rhs.remove_suffix(1);
                scalars_[name] = parse_number(trim(rhs), lines_[i].number);
            }
        }
    }

    std::size_t read_table(const std::string& name, std::size_t i, std::string_view rest) {
        Table table;
        table.line = lines_[i].number;
        Row current;
        auto flush = [&] {
            if (!current.values.empty()) table.rows.push_back(std::move(current));
            current = Row{};
        };
        for (;;) {
            const std::size_t number = lines_[i].number;
            bool closed = false;
            std::size_t pos = 0;
            while (pos < rest.size()) {
                const char c = rest[pos];
                if (std::isspace(static_cast<unsigned char>(c)) || c == ',') {
                    ++pos;
                } else if (c == ';') {
                    flush();
                    ++pos;
                } else if (c == ']') {
                    closed = true;
                    break;
                } else {
                    std::size_t end = pos;
                    while (end < rest.size() && !std::isspace(static_cast<unsigned char>(rest[end])) &&
                           rest[end] != ',' && rest[end] != ';' && rest[end] != ']')
                        ++end;
                    if (current.values.empty()) current.line = number;
                    current.values.push_back(parse_number(rest.substr(pos, end - pos), number));
                    pos = end;
                }
            }
            flush();  // a newline also terminates a row
            if (closed) break;
            if (++i >= lines_.size()) throw ParseError("unterminated table mpc." + name, table.line);
            rest = lines_[i].text;
        }
        for (const auto& row : table.rows)
            if (row.values.size() != table.rows.front().values.size())
                throw ParseError("ragged row in mpc." + name, row.line);
        tables_[name] = std::move(table);
        return i;
    }

    std::vector<Line> lines_;
    std::map<std::string, double> scalars_;
    std::map<std::string, Table> tables_;
};

const Table& require_table(const MatpowerReader& reader, const std::string& name, std::size_t min_cols) {
    const Table* table = reader.table(name);
    if (!table) throw ParseError("missing table mpc." + name, 0);
    if (table->rows.empty()) throw ParseError("empty table mpc." + name, table->line);
    if (table->rows.front().values.size() < min_cols)
        throw ParseError("mpc." + name + " needs at least " + std::to_string(min_cols) + " columns",
                         table->rows.front().line);
    return *table;
}

std::size_t position_of(const std::map<int, std::size_t>& index, double id, std::size_t line,
                        const std::string& what) {
    auto it = index.find(static_cast<int>(id));
    if (it == index.end())
        throw ValidationError("line " + std::to_string(line) + ": " + what + " references unknown bus " +
                              std::to_string(static_cast<int>(id)));
    return it->second;
}

void apply_cost(Generator& gen, const std::vector<double>& row, double base, std::size_t line) {
    const int model = static_cast<int>(row[0]);
    if (model != 2) throw ParseError("only polynomial (model 2) generator costs are supported", line);
    const int n = static_cast<int>(row[3]);
    if (n < 1 || n > 3 || row.size() < static_cast<std::size_t>(4 + n))
        throw ParseError("polynomial cost must have 1 to 3 coefficients", line);
    double coeff[3] = {0.0, 0.0, 0.0};  // c2, c1, c0
    for (int k = 0; k < n; ++k) coeff[3 - n + k] = row[4 + k];
    gen.c2 = coeff[0] * base * base;
    gen.c1 = coeff[1] * base;
    gen.c0 = coeff[2];
}

std::size_t line_of_offset(std::string_view text, std::size_t offset) {
    std::size_t line = 1;
    for (std::size_t i = 0; i < offset && i < text.size(); ++i)
        if (text[i] == '\n') ++line;
    return line;
}

}  // namespace

NetworkCase parse_matpower(std::string_view text, const ParseOptions& options) {
    MatpowerReader reader(text);
    NetworkCase network;
    network.name = "matpower";
    if (auto pos = text.find("function"); pos != std::string_view::npos) {
        auto eq = text.find('=', pos);
        auto nl = text.find('\n', pos);
        if (eq != std::string_view::npos && eq < nl) network.name = std::string(trim(text.substr(eq + 1, nl - eq - 1)));
    }
    const auto base = reader.scalar("baseMVA");
    if (!base) throw ParseError("missing mpc.baseMVA", 0);
    network.base_mva = *base;
    const double mva = network.base_mva;

    const Table& bus_table = require_table(reader, "bus", 13);
    std::map<int, std::size_t> index;
    for (const auto& row : bus_table.rows) {
        const auto& v = row.values;
        Bus bus;
        bus.id = static_cast<int>(v[0]);
        switch (static_cast<int>(v[1])) {
            case 1: bus.type = BusType::load; break;
            case 2: bus.type = BusType::generator; break;
            case 3: bus.type = BusType::slack; break;
            case 4: throw ValidationError("line " + std::to_string(row.line) + ": isolated buses are not supported");
            default: throw ParseError("invalid bus type", row.line);
        }
        bus.pd = v[2] / mva;
        bus.qd = v[3] / mva;
        bus.gs = v[4] / mva;
        bus.bs = v[5] / mva;
        bus.vm_init = v[7];
        bus.va_init = v[8] * kDeg;
        bus.vm_max = v[11];
        bus.vm_min = v[12];
        bus.va_min = -options.default_angle_bound;
        bus.va_max = options.default_angle_bound;
        if (!index.emplace(bus.id, network.buses.size()).second)
            throw ValidationError("line " + std::to_string(row.line) + ": duplicate bus id");
        network.buses.push_back(bus);
    }

    const Table& gen_table = require_table(reader, "gen", 10);
    const Table* cost_table = reader.table("gencost");
    if (cost_table && cost_table->rows.size() < gen_table.rows.size())
        throw ParseError("mpc.gencost has fewer rows than mpc.gen", cost_table->line);
    for (std::size_t g = 0; g < gen_table.rows.size(); ++g) {
        const auto& row = gen_table.rows[g];
        const auto& v = row.values;
        if (v[7] <= 0.0) continue;  // out of service
        Generator gen;
        gen.bus = position_of(index, v[0], row.line, "generator");
        gen.pg_init = v[1] / mva;
        gen.qg_max = v[3] / mva;
        gen.qg_min = v[4] / mva;
        gen.vg = v[5];
        gen.pg_max = v[8] / mva;
        gen.pg_min = v[9] / mva;
        if (cost_table) apply_cost(gen, cost_table->rows[g].values, mva, cost_table->rows[g].line);
        network.generators.push_back(gen);
    }

    const Table& branch_table = require_table(reader, "branch", 11);
    for (const auto& row : branch_table.rows) {
        const auto& v = row.values;
        if (v[10] <= 0.0) continue;
        Branch br;
        br.from = position_of(index, v[0], row.line, "branch");
        br.to = position_of(index, v[1], row.line, "branch");
        br.r = v[2];
        br.x = v[3];
        br.b = v[4];
        br.s_max = v[5] / mva;
        br.tap = v[8] == 0.0 ? 1.0 : v[8];
        br.shift = v[9] * kDeg;
        network.branches.push_back(br);
    }

    // PV buses without an in-service generator behave as load buses.
    for (std::size_t i = 0; i < network.buses.size(); ++i)
        if (network.buses[i].type == BusType::generator && network.generators_at(i).empty())
            network.buses[i].type = BusType::load;

    validate(network);
    return network;
}

NetworkCase parse_native(std::string_view text, const ParseOptions& options) {
    using nlohmann::json;
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(e.what(), line_of_offset(text, e.byte == 0 ? 0 : e.byte - 1));
    }
    NetworkCase network;
    try {
        network.name = doc.value("name", std::string("case"));
        network.base_mva = doc.at("base_mva").get<double>();
        const double mva = network.base_mva;
        std::map<int, std::size_t> index;
        for (const auto& jb : doc.at("buses")) {
            Bus bus;
            bus.id = jb.at("id").get<int>();
            bus.type = bus_type_from_string(jb.at("type").get<std::string>());
            bus.pd = jb.value("pd", 0.0) / mva;
            bus.qd = jb.value("qd", 0.0) / mva;
            bus.gs = jb.value("gs", 0.0) / mva;
            bus.bs = jb.value("bs", 0.0) / mva;
            bus.vm_min = jb.at("vm_min").get<double>();
            bus.vm_max = jb.at("vm_max").get<double>();
            if (jb.contains("va_min_deg") != jb.contains("va_max_deg"))
                throw ValidationError("bus " + std::to_string(bus.id) + ": give both angle limits or neither");
            bus.va_min = jb.contains("va_min_deg") ? jb["va_min_deg"].get<double>() * kDeg : -options.default_angle_bound;
            bus.va_max = jb.contains("va_max_deg") ? jb["va_max_deg"].get<double>() * kDeg : options.default_angle_bound;
            bus.vm_init = jb.value("vm", 1.0);
            bus.va_init = jb.value("va_deg", 0.0) * kDeg;
            if (!index.emplace(bus.id, network.buses.size()).second)
                throw ValidationError("duplicate bus id " + std::to_string(bus.id));
            network.buses.push_back(bus);
        }
        auto lookup = [&](int id, const char* what) {
            auto it = index.find(id);
            if (it == index.end())
                throw ValidationError(std::string(what) + " references unknown bus " + std::to_string(id));
            return it->second;
        };
        for (const auto& jg : doc.value("generators", json::array())) {
            Generator gen;
            gen.bus = lookup(jg.at("bus").get<int>(), "generator");
            gen.pg_min = jg.at("pg_min").get<double>() / mva;
            gen.pg_max = jg.at("pg_max").get<double>() / mva;
            gen.qg_min = jg.at("qg_min").get<double>() / mva;
            gen.qg_max = jg.at("qg_max").get<double>() / mva;
            gen.vg = jg.value("vg", 1.0);
            gen.pg_init = jg.value("pg", 0.0) / mva;
            const auto cost = jg.value("cost", std::vector<double>{0.0, 0.0, 0.0});
            if (cost.size() != 3) throw ValidationError("generator cost must be [c2, c1, c0]");
            gen.c2 = cost[0] * mva * mva;
            gen.c1 = cost[1] * mva;
            gen.c0 = cost[2];
            network.generators.push_back(gen);
        }
        for (const auto& jr : doc.at("branches")) {
            Branch br;
            br.from = lookup(jr.at("from").get<int>(), "branch");
            br.to = lookup(jr.at("to").get<int>(), "branch");
            br.r = jr.at("r").get<double>();
            br.x = jr.at("x").get<double>();
            br.b = jr.value("b", 0.0);
            br.s_max = jr.value("rate_a", 0.0) / mva;
            const double tap = jr.value("tap", 1.0);
            br.tap = tap == 0.0 ? 1.0 : tap;
            br.shift = jr.value("shift_deg", 0.0) * kDeg;
            network.branches.push_back(br);
        }
    } catch (const json::exception& e) {
        throw ValidationError(std::string("case schema: ") + e.what());
    }
    validate(network);
    return network;
}

NetworkCase parse_case(std::string_view text, const ParseOptions& options) {
    const std::string_view body = trim(text);
    if (!body.empty() && body.front() == '{') return parse_native(text, options);
    return parse_matpower(text, options);
}

NetworkCase load_case(const std::filesystem::path& path, const ParseOptions& options) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open case file " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_case(buffer.str(), options);
}

std::string to_native_json(const NetworkCase& network) {
    using nlohmann::json;
    const double mva = network.base_mva;
    json doc;
    doc["format"] = "pfdiff-case";
    doc["schema_version"] = 1;
    doc["name"] = network.name;
    doc["base_mva"] = mva;
    json buses = json::array();
    for (const auto& bus : network.buses) {
        buses.push_back({{"id", bus.id},
                         {"type", to_string(bus.type)},
                         {"pd", bus.pd * mva},
                         {"qd", bus.qd * mva},
                         {"gs", bus.gs * mva},
                         {"bs", bus.bs * mva},
                         {"vm_min", bus.vm_min},
                         {"vm_max", bus.vm_max},
                         {"va_min_deg", bus.va_min / kDeg},
                         {"va_max_deg", bus.va_max / kDeg},
                         {"vm", bus.vm_init},
                         {"va_deg", bus.va_init / kDeg}});
    }
    doc["buses"] = buses;
    json gens = json::array();
    for (const auto& gen : network.generators) {
        gens.push_back({{"bus", network.buses[gen.bus].id},
                        {"pg_min", gen.pg_min * mva},
                        {"pg_max", gen.pg_max * mva},
                        {"qg_min", gen.qg_min * mva},
                        {"qg_max", gen.qg_max * mva},
                        {"vg", gen.vg},
                        {"pg", gen.pg_init * mva},
                        {"cost", {gen.c2 / (mva * mva), gen.c1 / mva, gen.c0}}});
    }
    doc["generators"] = gens;
    json branches = json::array();
    for (const auto& br : network.branches) {
        branches.push_back({{"from", network.buses[br.from].id},
                            {"to", network.buses[br.to].id},
                            {"r", br.r},
                            {"x", br.x},
                            {"b", br.b},
                            {"rate_a", br.s_max * mva},
                            {"tap", br.tap},
                            {"shift_deg", br.shift / kDeg}});
    }
    doc["branches"] = branches;
    return doc.dump(2);
}

}  // namespace pfdiff::grid

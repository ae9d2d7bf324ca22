#include "protogate/io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

namespace protogate {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::ParseError, "cannot open '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return std::move(buf).str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::ParseError, "cannot write '" + path.string() + "'");
    out << content;
    if (!out) throw Error(ErrorKind::ParseError, "write failed for '" + path.string() + "'");
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    fields.push_back(cur);
    return fields;
}

void put_u16(std::string& out, std::uint16_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
}

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double v) {
    const std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

class ByteReader {
public:
    explicit ByteReader(const std::string& data) : data_(data) {}

    std::uint16_t u16() { return static_cast<std::uint16_t>(byte() | (byte() << 8)); }

    std::uint32_t u32() {
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(byte()) << (8 * i);
        return v;
    }

    double f64() {
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(byte()) << (8 * i);
        return std::bit_cast<double>(v);
    }

    std::string bytes(std::size_t n) {
        if (pos_ + n > data_.size())
            throw Error(ErrorKind::ParseError, "binary file truncated");
        std::string out = data_.substr(pos_, n);
        pos_ += n;
        return out;
    }

    bool done() const { return pos_ == data_.size(); }

private:
    std::uint32_t byte() {
        if (pos_ >= data_.size()) throw Error(ErrorKind::ParseError, "binary file truncated");
        return static_cast<unsigned char>(data_[pos_++]);
    }

    const std::string& data_;
    std::size_t pos_ = 0;
};

constexpr char kMagic[4] = {'P', 'G', 'E', 'B'};
constexpr std::uint16_t kBinVersion = 1;

int parse_external_label(double raw, int num_classes, const std::string& id) {
    const double rounded = std::round(raw);
    if (!std::isfinite(raw) || std::abs(raw - rounded) > 0.0 || rounded < 0.0 ||
        rounded > static_cast<double>(num_classes))
        throw Error(ErrorKind::SchemaError, "record '" + id + "' has invalid label");
    return static_cast<int>(rounded) - 1; // external 1-based; 0 -> internal -1 (withheld)
}

// withheld labels are all-or-nothing per file
void finalize_labels(LabeledEmbeddingSet& set) {
    bool any_present = false, any_missing = false;
    for (const auto& r : set.records) (r.label < 0 ? any_missing : any_present) = true;
    if (any_present && any_missing)
        throw Error(ErrorKind::SchemaError, "file mixes labeled and unlabeled records");
    set.has_labels = !any_missing;
}

UnitEmbedding ingest_embedding(std::vector<double> raw, const std::string& id) {
    for (double x : raw)
        if (!std::isfinite(x))
            throw Error(ErrorKind::NormError, "record '" + id + "' embedding has non-finite entry");
    const double n = norm2(raw);
    if (std::abs(n - 1.0) > 1e-6)
        throw Error(ErrorKind::NormError,
                    "record '" + id + "' embedding norm " + format_double(n) + " is not unit");
    return normalize(raw);
}

ordered_json parse_json(const std::filesystem::path& path) {
    try {
        return ordered_json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::ParseError, "'" + path.string() + "': " + e.what());
    }
}

double json_number(const ordered_json& j, const std::string& key, const std::string& context) {
    if (!j.contains(key) || !j.at(key).is_number())
        throw Error(ErrorKind::ParseError, context + ": missing numeric field '" + key + "'");
    return j.at(key).get<double>();
}

} // namespace

EmbeddingFormat format_from_string(const std::string& name) {
    if (name == "csv") return EmbeddingFormat::csv;
    if (name == "bin") return EmbeddingFormat::bin;
    throw Error(ErrorKind::ConfigError, "unknown embedding format '" + name + "'");
}

EmbeddingFormat format_from_path(const std::filesystem::path& path) {
    const auto ext = path.extension().string();
    if (ext == ".csv") return EmbeddingFormat::csv;
    if (ext == ".bin") return EmbeddingFormat::bin;
    throw Error(ErrorKind::ConfigError,
                "cannot infer format from '" + path.string() + "'; expected .csv or .bin");
}

std::string format_double(double v) {
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& text) {
    double v = 0.0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    const auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc{} || res.ptr != last)
        throw Error(ErrorKind::ParseError, "invalid number '" + text + "'");
    return v;
}

namespace {

LabeledEmbeddingSet read_embeddings_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::ParseError, "cannot open '" + path.string() + "'");
    std::string line;
    if (!std::getline(in, line))
        throw Error(ErrorKind::ParseError, "'" + path.string() + "': empty file");
    const auto header = split_csv_line(line);
    if (header.size() < 4 || header[0] != "id" || header[1] != "label")
        throw Error(ErrorKind::SchemaError, "header must start with id,label");
    int num_logits = 0;
    std::size_t col = 2;
    while (col < header.size() && header[col] == "logit_" + std::to_string(num_logits + 1)) {
        ++num_logits;
        ++col;
    }
    int dim = 0;
    while (col < header.size() && header[col] == "z_" + std::to_string(dim + 1)) {
        ++dim;
        ++col;
    }
    if (col != header.size() || num_logits < 2 || dim < 2)
        throw Error(ErrorKind::SchemaError, "header must be id,label,logit_1..C,z_1..D with C,D >= 2");

    LabeledEmbeddingSet set;
    set.num_classes = num_logits;
    set.dim = dim;

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != header.size())
            throw Error(ErrorKind::ParseError, "line " + std::to_string(line_no) + ": expected " +
                                                   std::to_string(header.size()) + " fields, got " +
                                                   std::to_string(fields.size()));
        EmbeddingRecord rec;
        rec.id = fields[0];
        if (rec.id.empty())
            throw Error(ErrorKind::ParseError, "line " + std::to_string(line_no) + ": empty id");
        try {
            const double raw_label = fields[1].empty() ? 0.0 : parse_double(fields[1]);
            rec.label = parse_external_label(raw_label, num_logits, rec.id);
            rec.logits.reserve(num_logits);
            for (int i = 0; i < num_logits; ++i) rec.logits.push_back(parse_double(fields[2 + i]));
            std::vector<double> z;
            z.reserve(dim);
            for (int i = 0; i < dim; ++i) z.push_back(parse_double(fields[2 + num_logits + i]));
            rec.embedding = ingest_embedding(std::move(z), rec.id);
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::ParseError)
                throw Error(ErrorKind::ParseError, "line " + std::to_string(line_no) + ": " + e.what());
            throw;
        }
        set.records.push_back(std::move(rec));
    }
    return set;
}

LabeledEmbeddingSet read_embeddings_bin(const std::filesystem::path& path) {
    const std::string data = read_file(path);
    ByteReader reader(data);
    if (reader.bytes(4) != std::string(kMagic, 4))
        throw Error(ErrorKind::ParseError, "'" + path.string() + "': bad magic");
    const auto version = reader.u16();
    if (version != kBinVersion)
        throw Error(ErrorKind::ParseError, "unsupported binary version " + std::to_string(version));
    const auto n = reader.u32();
    const auto num_classes = reader.u32();
    const auto dim = reader.u32();
    if (num_classes < 2 || dim < 2)
        throw Error(ErrorKind::SchemaError, "binary header must carry C,D >= 2");

    LabeledEmbeddingSet set;
    set.num_classes = static_cast<int>(num_classes);
    set.dim = static_cast<int>(dim);
    set.records.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) {
        EmbeddingRecord rec;
        const auto id_len = reader.u32();
        rec.id = reader.bytes(id_len);
        if (rec.id.empty())
            throw Error(ErrorKind::ParseError, "record " + std::to_string(i) + ": empty id");
        rec.label = parse_external_label(reader.f64(), set.num_classes, rec.id);
        rec.logits.resize(num_classes);
        for (auto& l : rec.logits) l = reader.f64();
        std::vector<double> z(dim);
        for (auto& x : z) x = reader.f64();
        rec.embedding = ingest_embedding(std::move(z), rec.id);
        set.records.push_back(std::move(rec));
    }
    if (!reader.done())
        throw Error(ErrorKind::ParseError, "'" + path.string() + "': trailing bytes");
    return set;
}

} // namespace

LabeledEmbeddingSet read_embeddings(const std::filesystem::path& path, EmbeddingFormat format) {
    LabeledEmbeddingSet set = format == EmbeddingFormat::csv ? read_embeddings_csv(path)
                                                             : read_embeddings_bin(path);
    finalize_labels(set);
    set.validate();
    return set;
}

void write_embeddings(const LabeledEmbeddingSet& data, const std::filesystem::path& path,
                      EmbeddingFormat format) {
    for (const auto& r : data.records)
        if (r.id.find(',') != std::string::npos || r.id.find('\n') != std::string::npos)
            throw Error(ErrorKind::SchemaError, "record id '" + r.id + "' contains a separator");
    std::string out;
    if (format == EmbeddingFormat::csv) {
        out = "id,label";
        for (int i = 1; i <= data.num_classes; ++i) out += ",logit_" + std::to_string(i);
        for (int i = 1; i <= data.dim; ++i) out += ",z_" + std::to_string(i);
        out += "\n";
        for (const auto& r : data.records) {
            out += r.id;
            out += ',' + std::to_string(r.label + 1);
            for (double l : r.logits) out += ',' + format_double(l);
            for (double z : r.embedding.values) out += ',' + format_double(z);
            out += '\n';
        }
    } else {
        out.assign(kMagic, 4);
        put_u16(out, kBinVersion);
        put_u32(out, static_cast<std::uint32_t>(data.records.size()));
        put_u32(out, static_cast<std::uint32_t>(data.num_classes));
        put_u32(out, static_cast<std::uint32_t>(data.dim));
        for (const auto& r : data.records) {
            put_u32(out, static_cast<std::uint32_t>(r.id.size()));
            out += r.id;
            put_f64(out, static_cast<double>(r.label + 1));
            for (double l : r.logits) put_f64(out, l);
            for (double z : r.embedding.values) put_f64(out, z);
        }
    }
    write_file(path, out);
}

void write_bank(const PrototypeBank& bank, const std::filesystem::path& path) {
    ordered_json j;
    j["version"] = 1;
    j["num_classes"] = bank.num_classes;
    j["dim"] = bank.dim;
    j["kappa"] = bank.kappa;
    j["tau_sim"] = bank.tau_sim;
    j["seed"] = bank.seed;
    auto protos = ordered_json::array();
    for (const auto& cls : bank.prototypes) {
        auto cj = ordered_json::array();
        for (const auto& p : cls) cj.push_back(p.values);
        protos.push_back(std::move(cj));
    }
    j["prototypes"] = std::move(protos);
    write_file(path, j.dump(2) + "\n");
}

PrototypeBank read_bank(const std::filesystem::path& path) {
    const auto j = parse_json(path);
    PrototypeBank bank;
    try {
        if (j.at("version").get<int>() != 1)
            throw Error(ErrorKind::ParseError, "unsupported bank version");
        bank.num_classes = j.at("num_classes").get<int>();
        bank.dim = j.at("dim").get<int>();
        bank.kappa = j.at("kappa").get<double>();
        bank.tau_sim = j.at("tau_sim").get<double>();
        bank.seed = j.at("seed").get<std::uint64_t>();
        for (const auto& cls : j.at("prototypes")) {
            std::vector<UnitEmbedding> protos;
            for (const auto& p : cls) protos.push_back(UnitEmbedding{p.get<std::vector<double>>()});
            bank.prototypes.push_back(std::move(protos));
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::ParseError, "'" + path.string() + "': " + e.what());
    }
    bank.validate(); // InvariantViolation on breaches
    return bank;
}

void write_predictions(const std::vector<PredictionRecord>& records,
                       const std::filesystem::path& path) {
    if (records.empty()) throw Error(ErrorKind::EmptyInput, "no predictions to write");
    const std::size_t num_classes = records.front().p_final.probs.size();
    std::string out = "id,y_cls,y_sim,y_hat,gate,gamma_cls,h_cls,gamma_sim,delta_sim,d_js";
    for (std::size_t i = 1; i <= num_classes; ++i) out += ",p_final_" + std::to_string(i);
    out += '\n';
    for (const auto& r : records) {
        if (r.id.find(',') != std::string::npos)
            throw Error(ErrorKind::SchemaError, "record id '" + r.id + "' contains a separator");
        out += r.id;
        out += ',' + std::to_string(r.signals.y_cls + 1);
        out += ',' + std::to_string(r.signals.y_sim + 1);
        out += ',' + std::to_string(r.y_hat + 1);
        out += ',' + std::to_string(r.signals.gate ? 1 : 0);
        out += ',' + format_double(r.signals.gamma_cls);
        out += ',' + format_double(r.signals.h_cls);
        out += ',' + format_double(r.signals.gamma_sim);
        out += ',' + format_double(r.signals.delta_sim);
        out += ',' + format_double(r.signals.d_js);
        for (double p : r.p_final.probs) out += ',' + format_double(p);
        out += '\n';
    }
    write_file(path, out);
}

std::vector<PredictionRecord> read_predictions(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::ParseError, "cannot open '" + path.string() + "'");
    std::string line;
    if (!std::getline(in, line))
        throw Error(ErrorKind::ParseError, "'" + path.string() + "': empty file");
    const auto header = split_csv_line(line);
    constexpr std::size_t kFixed = 10;
    if (header.size() <= kFixed || header[0] != "id" || header[1] != "y_cls")
        throw Error(ErrorKind::SchemaError, "unexpected prediction header");
    const std::size_t num_classes = header.size() - kFixed;

    std::vector<PredictionRecord> records;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != header.size())
            throw Error(ErrorKind::ParseError, "line " + std::to_string(line_no) + ": field count");
        try {
            PredictionRecord rec;
            rec.id = fields[0];
            rec.signals.y_cls = static_cast<int>(parse_double(fields[1])) - 1;
            rec.signals.y_sim = static_cast<int>(parse_double(fields[2])) - 1;
            rec.y_hat = static_cast<int>(parse_double(fields[3])) - 1;
            rec.signals.gate = parse_double(fields[4]) != 0.0;
            rec.signals.gamma_cls = parse_double(fields[5]);
            rec.signals.h_cls = parse_double(fields[6]);
            rec.signals.gamma_sim = parse_double(fields[7]);
            rec.signals.delta_sim = parse_double(fields[8]);
            rec.signals.d_js = parse_double(fields[9]);
            rec.p_final.probs.reserve(num_classes);
            for (std::size_t i = 0; i < num_classes; ++i)
                rec.p_final.probs.push_back(parse_double(fields[kFixed + i]));
            rec.p_final.validate();
            rec.source = rec.signals.gate ? PredictionSource::fused : PredictionSource::classifier;
            records.push_back(std::move(rec));
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::ParseError)
                throw Error(ErrorKind::ParseError, "line " + std::to_string(line_no) + ": " + e.what());
            throw;
        }
    }
    if (records.empty()) throw Error(ErrorKind::EmptyInput, "'" + path.string() + "': no records");
    return records;
}

GateConfig read_gate_config(const std::filesystem::path& path) {
    const auto j = parse_json(path);
    GateConfig cfg;
    cfg.theta_gate = json_number(j, "theta_gate", "gate config");
    cfg.beta = json_number(j, "beta", "gate config");
    cfg.m_sim = json_number(j, "m_sim", "gate config");
    cfg.delta = json_number(j, "delta", "gate config");
    cfg.alpha_low = json_number(j, "alpha_low", "gate config");
    if (j.contains("entropy_max") && !j.at("entropy_max").is_null())
        cfg.entropy_max = json_number(j, "entropy_max", "gate config");
    cfg.validate();
    return cfg;
}

void write_gate_config(const GateConfig& cfg, const std::filesystem::path& path) {
    ordered_json j;
    j["theta_gate"] = cfg.theta_gate;
    j["beta"] = cfg.beta;
    j["m_sim"] = cfg.m_sim;
    j["delta"] = cfg.delta;
    j["alpha_low"] = cfg.alpha_low;
    j["entropy_max"] = cfg.entropy_max ? ordered_json(*cfg.entropy_max) : ordered_json(nullptr);
    write_file(path, j.dump(2) + "\n");
}

void write_report(const EvalReport& report, const std::filesystem::path& path) {
    ordered_json j;
    j["accuracy"] = report.accuracy;
    j["macro_f1"] = report.macro_f1;
    j["balanced_accuracy"] = report.balanced_accuracy;
    j["ece"] = report.ece;
    j["m_auc"] = report.m_auc;
    j["num_bins"] = report.num_bins;
    auto excluded = ordered_json::array();
    for (int c : report.auc_excluded) excluded.push_back(c + 1);
    j["auc_excluded_classes"] = std::move(excluded);
    auto per_class = ordered_json::array();
    for (std::size_t c = 0; c < report.per_class.size(); ++c) {
        ordered_json cj;
        cj["class"] = c + 1;
        cj["precision"] = report.per_class[c].precision;
        cj["recall"] = report.per_class[c].recall;
        cj["f1"] = report.per_class[c].f1;
        cj["support"] = report.per_class[c].support;
        per_class.push_back(std::move(cj));
    }
    j["per_class"] = std::move(per_class);
    write_file(path, j.dump(2) + "\n");
}

std::unordered_map<std::string, int> read_labels(const std::filesystem::path& path) {
    std::unordered_map<std::string, int> out;
    {
        std::ifstream probe(path, std::ios::binary);
        if (!probe) throw Error(ErrorKind::ParseError, "cannot open '" + path.string() + "'");
        char magic[4] = {};
        probe.read(magic, 4);
        if (probe.gcount() == 4 && std::string(magic, 4) == std::string(kMagic, 4)) {
            const auto set = read_embeddings(path, EmbeddingFormat::bin);
            if (!set.has_labels)
                throw Error(ErrorKind::SchemaError, "'" + path.string() + "' carries no labels");
            for (const auto& r : set.records) out[r.id] = r.label;
            return out;
        }
    }
    std::ifstream in(path);
    std::string line;
    if (!std::getline(in, line))
        throw Error(ErrorKind::ParseError, "'" + path.string() + "': empty file");
    const auto header = split_csv_line(line);
    if (header.size() == 2 && header[0] == "id" && header[1] == "label") {
        std::size_t line_no = 1;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty() || line == "\r") continue;
            const auto fields = split_csv_line(line);
            if (fields.size() != 2)
                throw Error(ErrorKind::ParseError, "line " + std::to_string(line_no) + ": field count");
            const double raw = parse_double(fields[1]);
            const int label = parse_external_label(raw, 1 << 20, fields[0]);
            if (label < 0)
                throw Error(ErrorKind::SchemaError, "line " + std::to_string(line_no) + ": label 0");
            if (!out.emplace(fields[0], label).second)
                throw Error(ErrorKind::DuplicateId, "duplicate id '" + fields[0] + "'");
        }
        if (out.empty()) throw Error(ErrorKind::EmptyInput, "'" + path.string() + "': no labels");
        return out;
    }
    const auto set = read_embeddings(path, EmbeddingFormat::csv);
    if (!set.has_labels)
        throw Error(ErrorKind::SchemaError, "'" + path.string() + "' carries no labels");
    for (const auto& r : set.records) out[r.id] = r.label;
    return out;
}

Objective objective_from_string(const std::string& name) {
    if (name == "balacc") return Objective::balacc;
    if (name == "accuracy") return Objective::accuracy;
    if (name == "macro_f1") return Objective::macro_f1;
    throw Error(ErrorKind::ConfigError, "unknown objective '" + name + "'");
}

void TuneGrid::validate() const {
    auto check = [](const std::vector<double>& values, const std::string& name, double lo,
                    double hi, bool open_hi) {
        if (values.empty()) throw Error(ErrorKind::ConfigError, "empty grid for " + name);
        for (double v : values) {
            const bool ok = v >= lo && (open_hi ? v < hi : v <= hi);
            if (!ok)
                throw Error(ErrorKind::ConfigError,
                            name + " grid value " + format_double(v) + " out of range");
        }
    };
    check(theta_gate, "theta_gate", 0.0, 1.0, false);
    check(beta, "beta", 0.0, 1.0, true);
    check(m_sim, "m_sim", 0.0, 1.0, true);
    check(delta, "delta", 0.0, std::numeric_limits<double>::infinity(), true);
    if (tau_sim.empty()) throw Error(ErrorKind::ConfigError, "empty grid for tau_sim");
    for (double v : tau_sim)
        if (!(v > 0.0)) throw Error(ErrorKind::ConfigError, "tau_sim grid values must be > 0");
}

TuneGrid read_tune_grid(const std::filesystem::path& path) {
    const auto j = parse_json(path);
    TuneGrid grid;
    try {
        if (j.contains("theta_gate")) grid.theta_gate = j.at("theta_gate").get<std::vector<double>>();
        if (j.contains("beta")) grid.beta = j.at("beta").get<std::vector<double>>();
        if (j.contains("m_sim")) grid.m_sim = j.at("m_sim").get<std::vector<double>>();
        if (j.contains("tau_sim")) grid.tau_sim = j.at("tau_sim").get<std::vector<double>>();
        if (j.contains("delta")) grid.delta = j.at("delta").get<std::vector<double>>();
        if (j.contains("objective"))
            grid.objective = objective_from_string(j.at("objective").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::ParseError, "'" + path.string() + "': " + e.what());
    }
    grid.validate();
    return grid;
}

void write_tune_table(const TuneResult& result, const std::filesystem::path& path) {
    std::string out = "theta_gate,beta,m_sim,delta,tau_sim,objective,gate_rate,accuracy,"
                      "balanced_accuracy,macro_f1\n";
    for (const auto& row : result.table) {
        out += format_double(row.theta_gate);
        out += ',' + format_double(row.beta);
        out += ',' + format_double(row.m_sim);
        out += ',' + format_double(row.delta);
        out += ',' + format_double(row.tau_sim);
        out += ',' + format_double(row.objective);
        out += ',' + format_double(row.gate_rate);
        out += ',' + format_double(row.acc);
        out += ',' + format_double(row.balacc);
        out += ',' + format_double(row.mf1);
        out += '\n';
    }
    write_file(path, out);
}

PipelineConfig read_pipeline_config(const std::filesystem::path& path) {
    const auto j = parse_json(path);
    PipelineConfig cfg;
    try {
        if (j.contains("k")) cfg.k = j.at("k").get<int>();
        if (j.contains("kappa")) cfg.kappa = j.at("kappa").get<double>();
        if (j.contains("tau_sim")) cfg.tau_sim = j.at("tau_sim").get<double>();
        if (j.contains("restarts")) cfg.restarts = j.at("restarts").get<int>();
        if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("val_fraction")) cfg.val_fraction = j.at("val_fraction").get<double>();
        if (j.contains("bins")) cfg.bins = j.at("bins").get<int>();
        if (j.contains("threads")) cfg.threads = j.at("threads").get<int>();
        if (j.contains("grid")) {
            const auto& g = j.at("grid");
            if (g.contains("theta_gate")) cfg.grid.theta_gate = g.at("theta_gate").get<std::vector<double>>();
            if (g.contains("beta")) cfg.grid.beta = g.at("beta").get<std::vector<double>>();
            if (g.contains("m_sim")) cfg.grid.m_sim = g.at("m_sim").get<std::vector<double>>();
            if (g.contains("tau_sim")) cfg.grid.tau_sim = g.at("tau_sim").get<std::vector<double>>();
            if (g.contains("delta")) cfg.grid.delta = g.at("delta").get<std::vector<double>>();
            if (g.contains("objective"))
                cfg.grid.objective = objective_from_string(g.at("objective").get<std::string>());
        }
        if (j.contains("gate")) {
            const auto& g = j.at("gate");
            if (g.contains("alpha_low")) cfg.base_gate.alpha_low = g.at("alpha_low").get<double>();
            if (g.contains("entropy_max") && !g.at("entropy_max").is_null())
                cfg.base_gate.entropy_max = g.at("entropy_max").get<double>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::ParseError, "'" + path.string() + "': " + e.what());
    }
    cfg.grid.validate();
    return cfg;
}

} // namespace protogate

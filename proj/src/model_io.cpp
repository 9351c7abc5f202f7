#include "conespectra/model_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "conespectra/errors.hpp"
#include "json.hpp"

namespace conespectra {

namespace {

using nlohmann::json;

[[noreturn]] void throw_at(const std::string& text, std::size_t byte, const std::string& msg) {
    int line = 1, col = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    throw ParseError(msg + " (line " + std::to_string(line) + ", column " + std::to_string(col) + ")",
                     line, col);
}

int label_index(const std::vector<std::string>& names, const std::string& name) {
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return static_cast<int>(i);
    throw ParseError("unknown label name '" + name + "'", 0, 0);
}

}  // namespace

std::string format_double(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

std::string fnv1a_hex(const std::string& payload) {
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (unsigned char c : payload) {
        h ^= c;
        h *= 0x100000001B3ull;
    }
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string mode_name(DisorderMode mode) {
    switch (mode) {
        case DisorderMode::IidPotential: return "iid_potential";
        case DisorderMode::IidHopping: return "iid_hopping";
        case DisorderMode::IidBoth: return "iid_both";
        case DisorderMode::CorrelatedDecay: return "correlated_decay";
        case DisorderMode::EdgeWeightLaplacian: return "edge_weight_laplacian";
    }
    return "iid_both";
}

DisorderMode mode_from_name(const std::string& name) {
    if (name == "iid_potential") return DisorderMode::IidPotential;
    if (name == "iid_hopping") return DisorderMode::IidHopping;
    if (name == "iid_both") return DisorderMode::IidBoth;
    if (name == "correlated_decay") return DisorderMode::CorrelatedDecay;
    if (name == "edge_weight_laplacian") return DisorderMode::EdgeWeightLaplacian;
    throw ParseError("unknown disorder mode '" + name + "'", 0, 0);
}

std::string law_name(LawKind kind) {
    switch (kind) {
        case LawKind::Uniform: return "uniform";
        case LawKind::TwoPoint: return "two_point";
        case LawKind::TruncatedNormal: return "truncated_normal";
    }
    return "uniform";
}

LawKind law_from_name(const std::string& name) {
    if (name == "uniform") return LawKind::Uniform;
    if (name == "two_point") return LawKind::TwoPoint;
    if (name == "truncated_normal") return LawKind::TruncatedNormal;
    throw ParseError("unknown law '" + name + "'", 0, 0);
}

ModelFile parse_model_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw_at(text, e.byte, e.what());
    }

    ModelFile mf;
    try {
        const auto names = j.at("alphabet").get<std::vector<std::string>>();
        mf.model.alphabet_size = static_cast<int>(names.size());
        mf.model.label_names = names;
        mf.model.matrix = j.at("matrix").get<std::vector<long long>>();
        mf.model.v_per = j.at("v_per").get<std::vector<double>>();
        mf.model.root_label = label_index(names, j.at("root_label").get<std::string>());

        const std::size_t n = static_cast<std::size_t>(mf.model.alphabet_size);
        if (mf.model.matrix.size() != n * n)
            throw ParseError("matrix must have alphabet^2 entries", 0, 0);
        if (mf.model.v_per.size() != n) throw ParseError("v_per must have one entry per label", 0, 0);
        for (long long e : mf.model.matrix)
            if (e < 0) throw ParseError("matrix entries must be nonnegative", 0, 0);

        if (j.contains("disorder")) {
            mf.has_disorder = true;
            const json& d = j.at("disorder");
            mf.disorder.mode = mode_from_name(d.at("mode").get<std::string>());
            for (const json& lj : d.at("per_label")) {
                Law law;
                law.kind = law_from_name(lj.at("law").get<std::string>());
                if (lj.contains("width")) law.width = lj.at("width").get<double>();
                if (lj.contains("sigma")) law.sigma = lj.at("sigma").get<double>();
                mf.disorder.per_label.push_back(law);
            }
            if (d.contains("root_v_per_override"))
                mf.disorder.root_v_per_override = d.at("root_v_per_override").get<double>();
            if (mf.disorder.per_label.size() != n)
                throw ParseError("disorder.per_label must have one law per label", 0, 0);
        }
    } catch (const json::exception& e) {
        throw ParseError(e.what(), 0, 0);
    }
    return mf;
}

ModelFile read_model_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open '" + path + "'", 0, 0);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_model_text(ss.str());
}

std::string model_to_text(const ModelFile& mf) {
    std::ostringstream out;
    const auto& m = mf.model;
    out << "{\n  \"alphabet\": [";
    for (int k = 0; k < m.alphabet_size; ++k) {
        const std::string name =
            k < static_cast<int>(m.label_names.size()) ? m.label_names[static_cast<std::size_t>(k)]
                                                       : "l" + std::to_string(k);
        out << (k ? ", " : "") << '"' << name << '"';
    }
    out << "],\n  \"matrix\": [";
    for (std::size_t i = 0; i < m.matrix.size(); ++i) out << (i ? ", " : "") << m.matrix[i];
    out << "],\n  \"v_per\": [";
    for (std::size_t i = 0; i < m.v_per.size(); ++i)
        out << (i ? ", " : "") << format_double(m.v_per[i]);
    const std::string root_name = m.root_label < static_cast<int>(m.label_names.size())
                                      ? m.label_names[static_cast<std::size_t>(m.root_label)]
                                      : "l" + std::to_string(m.root_label);
    out << "],\n  \"root_label\": \"" << root_name << '"';
    if (mf.has_disorder) {
        out << ",\n  \"disorder\": {\n    \"mode\": \"" << mode_name(mf.disorder.mode)
            << "\",\n    \"per_label\": [";
        for (std::size_t i = 0; i < mf.disorder.per_label.size(); ++i) {
            const Law& law = mf.disorder.per_label[i];
            out << (i ? ", " : "") << "{\"law\": \"" << law_name(law.kind) << '"';
            if (law.kind == LawKind::TruncatedNormal)
                out << ", \"sigma\": " << format_double(law.sigma);
            else
                out << ", \"width\": " << format_double(law.width);
            out << '}';
        }
        out << "]";
        if (mf.disorder.root_v_per_override)
            out << ",\n    \"root_v_per_override\": " << format_double(*mf.disorder.root_v_per_override);
        out << "\n  }";
    }
    out << "\n}\n";
    return out.str();
}

void write_model_file(const std::string& path, const ModelFile& mf) {
    std::ofstream out(path, std::ios::binary);
    out << model_to_text(mf);
}

}  // namespace conespectra

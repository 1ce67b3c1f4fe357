#pragma once
// File formats:
//   .emb     one-line JSON header {"n": <int>, "d": <int>} then n*d little-endian
//            IEEE-754 float32 values, row-major.
//   votes    headerless CSV of integers in {-1,0,1}, one data point per row.
//   labels   headerless CSV, one integer in {-1,1} per row.
//   JSON     label-model parameters and radius configurations.

#include <array>
#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "lfx/core.hpp"

namespace lfx::io {

namespace detail {

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return std::move(ss).str();
}

inline void write_file(const std::filesystem::path& path, std::string_view bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("write failed for " + path.string());
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

// Splits CSV text into rows of integers. A single trailing newline is allowed.
inline std::vector<std::vector<int>> parse_int_csv(std::string_view text, const std::string& what) {
    std::vector<std::vector<int>> rows;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string_view::npos) eol = text.size();
        std::string_view line = trim(text.substr(pos, eol - pos));
        const std::size_t row = rows.size();
        if (line.empty()) throw DataError(what + ": empty line at row " + std::to_string(row));
        std::vector<int> values;
        std::size_t col = 0;
        while (true) {
            const std::size_t comma = line.find(',');
            const std::string_view cell = trim(line.substr(0, comma));
            int v = 0;
            const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
            if (ec != std::errc{} || ptr != cell.data() + cell.size() || cell.empty())
                throw DataError(what + ": non-integer entry '" + std::string(cell) + "' at (row " +
                                std::to_string(row) + ", col " + std::to_string(col) + ")");
            values.push_back(v);
            ++col;
            if (comma == std::string_view::npos) break;
            line.remove_prefix(comma + 1);
        }
        rows.push_back(std::move(values));
        pos = eol + 1;
    }
    if (rows.empty()) throw DataError(what + ": no rows");
    return rows;
}

inline std::uint32_t to_little_endian(std::uint32_t v) {
    if constexpr (std::endian::native == std::endian::little) return v;
    return ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) | (v >> 24);
}

}  // namespace detail

// ---- embeddings ------------------------------------------------------------

inline std::string encode_embeddings(const EmbeddingSet& emb) {
    std::string out = "{\"n\": " + std::to_string(emb.n()) + ", \"d\": " + std::to_string(emb.d()) + "}\n";
    const std::size_t header = out.size();
    out.resize(header + emb.n() * emb.d() * 4);
    char* dst = out.data() + header;
    for (std::size_t i = 0; i < emb.n(); ++i) {
        for (std::size_t k = 0; k < emb.d(); ++k) {
            const float f = static_cast<float>(emb.data()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)));
            const std::uint32_t bits = detail::to_little_endian(std::bit_cast<std::uint32_t>(f));
            std::memcpy(dst, &bits, 4);
            dst += 4;
        }
    }
    return out;
}

inline EmbeddingSet decode_embeddings(std::string_view bytes) {
    const std::size_t eol = bytes.find('\n');
    if (eol == std::string_view::npos) throw DataError("embeddings: missing header line");
    long long n = -1, d = -1;
    try {
        const auto header = nlohmann::json::parse(bytes.substr(0, eol));
        n = header.at("n").get<long long>();
        d = header.at("d").get<long long>();
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("embeddings: malformed header: ") + e.what());
    }
    if (n < 0 || d <= 0) throw DataError("embeddings: header requires n >= 0 and d > 0");
    const std::size_t expected = static_cast<std::size_t>(n) * static_cast<std::size_t>(d) * 4;
    const std::size_t payload = bytes.size() - eol - 1;
    if (payload < expected) throw DataError("embeddings: truncated payload");
    if (payload > expected) throw DataError("embeddings: payload longer than n*d*4 bytes");
    RowMatrix data(n, d);
    const char* src = bytes.data() + eol + 1;
    for (long long i = 0; i < n; ++i) {
        for (long long k = 0; k < d; ++k) {
            std::uint32_t bits;
            std::memcpy(&bits, src, 4);
            src += 4;
            data(i, k) = static_cast<double>(std::bit_cast<float>(detail::to_little_endian(bits)));
        }
    }
    return EmbeddingSet(std::move(data));
}

inline EmbeddingSet load_embeddings(const std::filesystem::path& path) {
    return decode_embeddings(detail::read_file(path));
}

inline void save_embeddings(const std::filesystem::path& path, const EmbeddingSet& emb) {
    detail::write_file(path, encode_embeddings(emb));
}

// ---- votes and labels ------------------------------------------------------

inline VoteMatrix parse_votes(std::string_view text) {
    const auto rows = detail::parse_int_csv(text, "votes");
    const std::size_t m = rows.front().size();
    std::vector<std::int8_t> flat;
    flat.reserve(rows.size() * m);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != m)
            throw DataError("votes: row " + std::to_string(i) + " has " + std::to_string(rows[i].size()) +
                            " columns, expected " + std::to_string(m));
        for (std::size_t j = 0; j < m; ++j) {
            const int v = rows[i][j];
            if (v < -1 || v > 1)
                throw DataError("votes: entry " + std::to_string(v) + " outside {-1,0,1} at (row " +
                                std::to_string(i) + ", col " + std::to_string(j) + ")");
            flat.push_back(static_cast<std::int8_t>(v));
        }
    }
    return VoteMatrix(rows.size(), m, std::move(flat));
}

inline std::string format_votes(const VoteMatrix& votes) {
    std::string out;
    out.reserve(votes.n() * votes.m() * 3);
    for (std::size_t i = 0; i < votes.n(); ++i) {
        for (std::size_t j = 0; j < votes.m(); ++j) {
            if (j) out.push_back(',');
            out += std::to_string(votes(i, j));
        }
        out.push_back('\n');
    }
    return out;
}

inline VoteMatrix load_votes(const std::filesystem::path& path) { return parse_votes(detail::read_file(path)); }

inline void save_votes(const std::filesystem::path& path, const VoteMatrix& votes) {
    detail::write_file(path, format_votes(votes));
}

inline LabelVector parse_labels(std::string_view text) {
    const auto rows = detail::parse_int_csv(text, "labels");
    std::vector<std::int8_t> labels;
    labels.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != 1)
            throw DataError("labels: row " + std::to_string(i) + " must hold exactly one value");
        const int v = rows[i][0];
        if (v != -1 && v != 1)
            throw DataError("labels: entry " + std::to_string(v) + " outside {-1,1} at (row " +
                            std::to_string(i) + ", col 0)");
        labels.push_back(static_cast<std::int8_t>(v));
    }
    return LabelVector(std::move(labels));
}

inline std::string format_labels(const LabelVector& labels) {
    std::string out;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        out += labels[i] > 0 ? "1\n" : "-1\n";
    }
    return out;
}

inline LabelVector load_labels(const std::filesystem::path& path) { return parse_labels(detail::read_file(path)); }

inline void save_labels(const std::filesystem::path& path, const LabelVector& labels) {
    detail::write_file(path, format_labels(labels));
}

// Shortest round-trip decimal form.
inline std::string format_double(double v) {
    std::array<char, 32> buf{};
    const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), ptr);
}

inline std::string format_probabilities(std::span<const double> probs) {
    std::string out;
    for (double p : probs) {
        out += format_double(p);
        out.push_back('\n');
    }
    return out;
}

inline void save_probabilities(const std::filesystem::path& path, std::span<const double> probs) {
    detail::write_file(path, format_probabilities(probs));
}

inline std::vector<double> load_probabilities(const std::filesystem::path& path) {
    const std::string text = detail::read_file(path);
    std::vector<double> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        const auto t = detail::trim(line);
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
        if (ec != std::errc{} || ptr != t.data() + t.size() || !(v >= 0.0 && v <= 1.0))
            throw DataError("posteriors: invalid probability at row " + std::to_string(out.size()));
        out.push_back(v);
    }
    if (out.empty()) throw DataError("posteriors: no rows");
    return out;
}

// ---- JSON ------------------------------------------------------------------

inline nlohmann::json to_json(const LabelModelParams& p) {
    return {{"accuracies", p.accuracies}, {"abstain_rates", p.abstain_rates}, {"prior", p.prior}};
}

inline LabelModelParams params_from_json(const nlohmann::json& j) {
    LabelModelParams p;
    try {
        p.accuracies = j.at("accuracies").get<std::vector<double>>();
        p.abstain_rates = j.at("abstain_rates").get<std::vector<double>>();
        p.prior = j.at("prior").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("params: ") + e.what());
    }
    p.validate();
    return p;
}

inline nlohmann::json to_json(const RadiusConfig& c) {
    return {{"radii", c.radii}, {"weighting", to_string(c.weighting)}};
}

inline RadiusConfig radius_config_from_json(const nlohmann::json& j) {
    RadiusConfig c;
    try {
        c.radii = j.at("radii").get<std::vector<double>>();
        if (j.contains("weighting")) c.weighting = parse_weighting(j.at("weighting").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("radius config: ") + e.what());
    }
    c.validate();
    return c;
}

inline nlohmann::json load_json(const std::filesystem::path& path) {
    try {
        return nlohmann::json::parse(detail::read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

inline void save_json(const std::filesystem::path& path, const nlohmann::json& j) {
    detail::write_file(path, j.dump(2) + "\n");
}

}  // namespace lfx::io

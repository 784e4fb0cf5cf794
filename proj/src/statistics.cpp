#include "reconfig/statistics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

namespace reconfig {

std::optional<double> pearson(const std::vector<double>& x, const std::vector<double>& y)
{
    if (x.size() != y.size()) {
        throw std::invalid_argument("pearson: series lengths differ");
    }
    const size_t n = x.size();
    if (n < 2) {
        return std::nullopt;
    }
    double mx = 0.0, my = 0.0;
    for (size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx <= 0.0 || syy <= 0.0) {
        return std::nullopt;
    }
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

// ---------------------------------------------------------------------------------------------
// Behavioral data

namespace {

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) {
        return "";
    }
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line)
{
    std::vector<std::string> out;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) {
        out.push_back(trim(cell));
    }
    if (!line.empty() && line.back() == ',') {
        out.emplace_back();
    }
    return out;
}

double parse_number(const std::string& cell, const std::string& ctx)
{
    try {
        size_t used = 0;
        const double v = std::stod(cell, &used);
        if (used != cell.size() || !std::isfinite(v)) {
            throw std::invalid_argument(cell);
        }
        return v;
    } catch (const std::exception&) {
        throw std::runtime_error(ctx + ": '" + cell + "' is not a number");
    }
}

std::optional<double> proportion(const std::string& cell, const std::string& ctx)
{
    if (cell.empty()) {
        return std::nullopt;
    }
    const double v = parse_number(cell, ctx);
    if (v < 0.0 || v > 1.0) {
        throw std::runtime_error(ctx + ": " + cell + " is outside [0, 1]");
    }
    return v;
}

std::optional<int> count(const std::string& cell, const std::string& ctx)
{
    if (cell.empty()) {
        return std::nullopt;
    }
    const double v = parse_number(cell, ctx);
    if (v < 0 || v != std::floor(v)) {
        throw std::runtime_error(ctx + ": sample size " + cell + " is not a non-negative integer");
    }
    return static_cast<int>(v);
}

} // namespace

std::vector<BehavioralRecord> parse_behavioral_csv(const std::string& text)
{
    static const std::vector<std::string> header{"problem_id", "p_one_hand_lab", "mean_judgment_online", "n_lab", "n_online"};
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    bool seen_header = false;
    std::vector<BehavioralRecord> out;
    std::set<int> ids;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) {
            continue;
        }
        const std::string ctx = "line " + std::to_string(lineno);
        const auto cells = split(line);
        if (!seen_header) {
            if (cells != header) {
                throw std::runtime_error(ctx + ": expected header problem_id,p_one_hand_lab,mean_judgment_online,n_lab,n_online");
            }
            seen_header = true;
            continue;
        }
        if (cells.size() != header.size()) {
            throw std::runtime_error(ctx + ": expected 5 fields, found " + std::to_string(cells.size()));
        }
        BehavioralRecord r;
        const double id = parse_number(cells[0], ctx);
        if (id != std::floor(id)) {
            throw std::runtime_error(ctx + ": problem id must be an integer");
        }
        r.problem_id = static_cast<int>(id);
        if (!ids.insert(r.problem_id).second) {
            throw std::runtime_error(ctx + ": duplicate problem id " + cells[0]);
        }
        r.p_one_hand_lab = proportion(cells[1], ctx);
        r.mean_judgment_online = proportion(cells[2], ctx);
        r.n_lab = count(cells[3], ctx);
        r.n_online = count(cells[4], ctx);
        out.push_back(r);
    }
    if (!seen_header) {
        throw std::runtime_error("behavioral data: missing header");
    }
    return out;
}

std::vector<BehavioralRecord> load_behavioral_csv(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open behavioral data file " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    try {
        return parse_behavioral_csv(ss.str());
    } catch (const std::runtime_error& e) {
        throw std::runtime_error(path.string() + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------------------------
// Bootstrap

std::vector<std::vector<size_t>> bootstrap_indices(size_t n, const BootstrapSettings& settings)
{
    if (settings.iterations < 1) {
        throw std::invalid_argument("bootstrap iterations must be at least 1");
    }
    std::mt19937_64 rng(settings.seed);
    std::vector<std::vector<size_t>> out(static_cast<size_t>(settings.iterations), std::vector<size_t>(n));
    for (auto& rep : out) {
        for (auto& i : rep) {
            // Plain modulo keeps the stream identical across standard libraries.
            i = static_cast<size_t>(rng() % n);
        }
    }
    return out;
}

namespace {

std::optional<double> resampled_r(const std::vector<double>& x, const std::vector<double>& y, const std::vector<size_t>& idx)
{
    std::vector<double> a, b;
    a.reserve(idx.size());
    b.reserve(idx.size());
    for (size_t i : idx) {
        a.push_back(x[i]);
        b.push_back(y[i]);
    }
    return pearson(a, b);
}

double quantile(const std::vector<double>& sorted, double q)
{
    if (sorted.empty()) {
        return 0.0;
    }
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<size_t>(std::floor(pos));
    const size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

} // namespace

CorrelationReport bootstrap_correlation(const std::vector<double>& prediction, const std::vector<double>& data,
                                        const std::vector<std::vector<size_t>>& indices, double level)
{
    CorrelationReport rep;
    rep.n = static_cast<int>(prediction.size());
    rep.r = pearson(prediction, data);
    for (const auto& idx : indices) {
        if (const auto r = resampled_r(prediction, data, idx)) {
            rep.replicates.push_back(*r);
        }
    }
    if (!rep.r) {
        return rep;
    }
    std::vector<double> sorted = rep.replicates;
    std::sort(sorted.begin(), sorted.end());
    const double tail = (1.0 - level) / 2.0;
    rep.lo = std::min(quantile(sorted, tail), *rep.r);
    rep.hi = std::max(quantile(sorted, 1.0 - tail), *rep.r);
    if (sorted.empty()) {
        rep.lo = rep.hi = *rep.r;
    }
    return rep;
}

ComparisonResult compare(const std::vector<Prediction>& predictions, const std::vector<BehavioralRecord>& data,
                         const BootstrapSettings& settings)
{
    std::map<std::string, std::map<int, std::optional<double>>> by_variant;
    std::vector<std::string> order;
    for (const auto& p : predictions) {
        if (!by_variant.count(p.variant)) {
            order.push_back(p.variant);
        }
        by_variant[p.variant][p.problem_id] = p.pr_one_hand;
    }
    std::set<int> data_ids;
    for (const auto& r : data) {
        data_ids.insert(r.problem_id);
    }
    for (const auto& [variant, rows] : by_variant) {
        std::set<int> ids;
        for (const auto& [id, _] : rows) {
            ids.insert(id);
        }
        if (ids != data_ids) {
            throw std::runtime_error("problem ids of variant " + variant + " do not match the behavioral data");
        }
    }

    ComparisonResult out;
    for (const std::string target : {"lab", "online"}) {
        std::vector<int> ids;
        for (const auto& r : data) {
            const auto& value = target == "lab" ? r.p_one_hand_lab : r.mean_judgment_online;
            bool ok = value.has_value();
            for (const auto& [_, rows] : by_variant) {
                ok = ok && rows.at(r.problem_id).has_value();
            }
            if (ok) {
                ids.push_back(r.problem_id);
            }
        }
        if (ids.empty()) {
            continue;
        }
        if (ids.size() < 3) {
            throw std::runtime_error("need at least three problems with " + target + " data, found " + std::to_string(ids.size()));
        }
        std::map<int, double> values;
        for (const auto& r : data) {
            const auto& value = target == "lab" ? r.p_one_hand_lab : r.mean_judgment_online;
            if (value) {
                values[r.problem_id] = *value;
            }
        }
        std::vector<double> y;
        for (int id : ids) {
            y.push_back(values.at(id));
        }
        const auto indices = bootstrap_indices(ids.size(), settings);
        std::map<std::string, std::vector<std::optional<double>>> per_replicate;
        for (const auto& variant : order) {
            std::vector<double> x;
            for (int id : ids) {
                x.push_back(*by_variant[variant].at(id));
            }
            auto rep = bootstrap_correlation(x, y, indices, settings.level);
            rep.variant = variant;
            rep.target = target;
            auto& reps = per_replicate[variant];
            for (const auto& idx : indices) {
                reps.push_back(resampled_r(x, y, idx));
            }
            out.reports.push_back(std::move(rep));
        }
        for (const auto& a : order) {
            for (const auto& b : order) {
                if (a == b) {
                    continue;
                }
                int total = 0;
                int not_exceed = 0;
                const auto& ra = per_replicate[a];
                const auto& rb = per_replicate[b];
                for (size_t k = 0; k < indices.size(); ++k) {
                    if (ra[k] && rb[k]) {
                        ++total;
                        not_exceed += *ra[k] <= *rb[k];
                    }
                }
                out.pairwise.push_back({a, b, target, total ? static_cast<double>(not_exceed) / total : 1.0});
            }
        }
    }
    return out;
}

} // namespace reconfig

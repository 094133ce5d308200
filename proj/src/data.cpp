#include "dacae/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <string>

#include <json.hpp>

#include "dacae/csv.hpp"
#include "dacae/errors.hpp"
#include "dacae/rng.hpp"

namespace dacae {

void Dataset::validate() const
{
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto& s = samples[i];
        if (s.x.size() != channels)
            throw ContractViolation("sample " + std::to_string(i) + " has " + std::to_string(s.x.size()) +
                                    " channels, expected " + std::to_string(channels));
        if (s.label >= classes) throw ContractViolation("sample " + std::to_string(i) + " label out of range");
        if (s.subject >= subjects) throw ContractViolation("sample " + std::to_string(i) + " subject out of range");
        for (double v : s.x)
            if (!std::isfinite(v)) throw ContractViolation("sample " + std::to_string(i) + " has a non-finite value");
    }
}

Dataset subset(const Dataset& data, std::span<const std::size_t> ids)
{
    Dataset out;
    out.channels = data.channels;
    out.classes = data.classes;
    out.subjects = data.subjects;
    out.normalization = data.normalization;
    out.samples.reserve(ids.size());
    for (std::size_t id : ids) {
        if (id >= data.samples.size()) throw ContractViolation("subset: sample id out of range");
        out.samples.push_back(data.samples[id]);
    }
    return out;
}

ChannelMap default_channel_map()
{
    return {"eda", "temp", "acc_x", "acc_y", "acc_z", "hr", "spo2"};
}

std::vector<double> resample_to_1hz(std::span<const double> times, std::span<const double> values,
                                    std::size_t windows)
{
    if (times.size() != values.size()) throw ContractViolation("resample: times/values length mismatch");
    if (times.empty()) throw ContractViolation("resample: channel has no samples");
    std::vector<double> sum(windows, 0.0);
    std::vector<std::size_t> count(windows, 0);
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (times[i] < 0.0) continue;
        const auto w = static_cast<std::size_t>(std::floor(times[i]));
        if (w >= windows) continue;
        sum[w] += values[i];
        ++count[w];
    }
    std::vector<double> out(windows);
    std::size_t next = 0; // first raw sample not yet at or before the current window start
    double held = values.front();
    for (std::size_t w = 0; w < windows; ++w) {
        while (next < times.size() && times[next] <= static_cast<double>(w)) held = values[next++];
        out[w] = count[w] ? sum[w] / static_cast<double>(count[w]) : held;
    }
    return out;
}

Dataset ingest(std::span<const RawTrial> trials, const ChannelMap& channel_map, std::size_t classes)
{
    if (channel_map.empty()) throw IngestError("channel map is empty");
    if (classes < 1) throw IngestError("class count must be >= 1");

    // subject id -> (trial id -> trial)
    std::map<std::size_t, std::map<std::size_t, const RawTrial*>> by_subject;
    for (const auto& t : trials) {
        const std::string where = "subject " + std::to_string(t.subject) + " trial " + std::to_string(t.trial);
        if (!t.label) throw IngestError(where + " is unlabeled");
        if (*t.label >= classes) throw IngestError(where + " has label " + std::to_string(*t.label) + " >= " +
                                                   std::to_string(classes));
        if (!by_subject[t.subject].emplace(t.trial, &t).second) throw IngestError(where + " appears twice");
    }

    Dataset out;
    out.channels = channel_map.size();
    out.classes = classes;
    out.subjects = by_subject.size();

    const auto relax = static_cast<std::size_t>(StressLabel::Relax);
    std::size_t subject_index = 0;
    for (const auto& [subject_id, subject_trials] : by_subject) {
        std::vector<std::size_t> per_class(classes, 0);
        bool relax_seen = false;
        for (const auto& [trial_id, trial] : subject_trials) {
            const std::string where = "subject " + std::to_string(subject_id) + " trial " + std::to_string(trial_id);
            if (*trial->label == relax) {
                if (relax_seen) continue;
                relax_seen = true;
            }

            std::vector<const RawChannel*> cols;
            for (const auto& name : channel_map) {
                const auto it = std::find_if(trial->channels.begin(), trial->channels.end(),
                                             [&](const RawChannel& c) { return c.name == name; });
                if (it == trial->channels.end() || it->times.empty())
                    throw IngestError(where + ": missing channel '" + name + "'");
                if (it->times.size() != it->values.size())
                    throw IngestError(where + ": channel '" + name + "' has mismatched times/values");
                cols.push_back(&*it);
            }
            double end = cols.front()->times.back();
            for (const auto* c : cols) end = std::min(end, c->times.back());
            if (end < 0.0) throw IngestError(where + ": no samples at or after t = 0");
            const auto windows = static_cast<std::size_t>(std::floor(end)) + 1;

            std::vector<std::vector<double>> grid;
            for (const auto* c : cols) grid.push_back(resample_to_1hz(c->times, c->values, windows));
            for (std::size_t w = 0; w < windows; ++w) {
                Sample s;
                s.x.resize(cols.size());
                for (std::size_t c = 0; c < cols.size(); ++c) {
                    s.x[c] = grid[c][w];
                    if (!std::isfinite(s.x[c]))
                        throw IngestError(where + ": non-finite value in channel '" + channel_map[c] + "'");
                }
                s.label = *trial->label;
                s.subject = subject_index;
                s.trial = trial_id;
                s.t = static_cast<double>(w);
                out.samples.push_back(std::move(s));
            }
            ++per_class[*trial->label];
        }
        for (std::size_t y = 0; y < classes; ++y)
            if (per_class[y] != 1)
                throw IngestError("subject " + std::to_string(subject_id) + " has " + std::to_string(per_class[y]) +
                                  " trials of class " + std::to_string(y) + " after relaxation exclusion");
        ++subject_index;
    }
    return out;
}

std::vector<RawTrial> read_raw_csv(std::istream& in)
{
    std::string line;
    if (!std::getline(in, line)) throw IoError("raw csv: missing header");
    const auto header = csv::split_line(line);
    const std::vector<std::string> expected{"subject", "trial", "label", "channel", "t", "value"};
    if (header != expected) throw IoError("raw csv: header must be subject,trial,label,channel,t,value");

    std::vector<RawTrial> trials;
    std::map<std::pair<std::size_t, std::size_t>, std::size_t> index;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto f = csv::split_line(line);
        const std::string where = "raw csv line " + std::to_string(line_no);
        if (f.size() != expected.size()) throw IoError(where + ": expected 6 fields");
        const std::size_t subject = csv::parse_index(f[0], where);
        const std::size_t trial = csv::parse_index(f[1], where);
        std::optional<std::size_t> label;
        if (!f[2].empty()) label = csv::parse_index(f[2], where);
        const auto key = std::make_pair(subject, trial);
        auto it = index.find(key);
        if (it == index.end()) {
            it = index.emplace(key, trials.size()).first;
            trials.push_back(RawTrial{subject, trial, label, {}});
        }
        RawTrial& rt = trials[it->second];
        if (rt.label != label) throw IoError(where + ": inconsistent label within trial");
        auto ch = std::find_if(rt.channels.begin(), rt.channels.end(),
                               [&](const RawChannel& c) { return c.name == f[3]; });
        if (ch == rt.channels.end()) {
            rt.channels.push_back(RawChannel{f[3], {}, {}});
            ch = rt.channels.end() - 1;
        }
        ch->times.push_back(csv::parse_double(f[4], where));
        ch->values.push_back(csv::parse_double(f[5], where));
    }
    return trials;
}

void write_interchange_csv(std::ostream& out, const Dataset& data)
{
    out << "subject,trial,label,t";
    for (std::size_t c = 0; c < data.channels; ++c) out << ",ch" << c;
    out << '\n';
    for (const auto& s : data.samples) {
        out << s.subject << ',' << s.trial << ',' << s.label << ',' << csv::format_double(s.t);
        for (double v : s.x) out << ',' << csv::format_double(v);
        out << '\n';
    }
}

Dataset read_interchange_csv(std::istream& in, std::size_t classes, std::size_t subjects)
{
    std::string line;
    if (!std::getline(in, line)) throw IoError("interchange csv: missing header");
    const auto header = csv::split_line(line);
    if (header.size() < 5 || header[0] != "subject" || header[1] != "trial" || header[2] != "label" ||
        header[3] != "t")
        throw IoError("interchange csv: header must start with subject,trial,label,t");
    const std::size_t channels = header.size() - 4;
    for (std::size_t c = 0; c < channels; ++c)
        if (header[4 + c] != "ch" + std::to_string(c))
            throw IoError("interchange csv: expected column ch" + std::to_string(c));

    Dataset d;
    d.channels = channels;
    std::size_t max_label = 0, max_subject = 0, line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto f = csv::split_line(line);
        const std::string where = "interchange csv line " + std::to_string(line_no);
        if (f.size() != header.size()) throw IoError(where + ": wrong field count");
        Sample s;
        s.subject = csv::parse_index(f[0], where);
        s.trial = csv::parse_index(f[1], where);
        s.label = csv::parse_index(f[2], where);
        s.t = csv::parse_double(f[3], where);
        s.x.resize(channels);
        for (std::size_t c = 0; c < channels; ++c) s.x[c] = csv::parse_double(f[4 + c], where);
        max_label = std::max(max_label, s.label);
        max_subject = std::max(max_subject, s.subject);
        d.samples.push_back(std::move(s));
    }
    if (d.samples.empty()) throw IoError("interchange csv: no samples");
    d.classes = classes ? classes : max_label + 1;
    d.subjects = subjects ? subjects : max_subject + 1;
    try {
        d.validate();
    } catch (const ContractViolation& e) {
        throw IoError(std::string("interchange csv: ") + e.what());
    }
    return d;
}

Dataset load_interchange_csv(const std::string& path, std::size_t classes, std::size_t subjects)
{
    std::ifstream in(path);
    if (!in) throw IoError("cannot open dataset '" + path + "'");
    return read_interchange_csv(in, classes, subjects);
}

Normalization fit_normalization(const Dataset& data, std::span<const std::size_t> train_ids)
{
    if (train_ids.empty()) throw ConfigError("normalize: empty training set");
    Normalization n;
    n.mean.assign(data.channels, 0.0);
    n.stddev.assign(data.channels, 0.0);
    for (std::size_t id : train_ids) {
        const auto& x = data.samples.at(id).x;
        for (std::size_t c = 0; c < data.channels; ++c) n.mean[c] += x[c];
    }
    const double inv = 1.0 / static_cast<double>(train_ids.size());
    for (double& m : n.mean) m *= inv;
    for (std::size_t id : train_ids) {
        const auto& x = data.samples[id].x;
        for (std::size_t c = 0; c < data.channels; ++c) {
            const double d = x[c] - n.mean[c];
            n.stddev[c] += d * d;
        }
    }
    for (auto& s : n.stddev) {
        s = std::sqrt(s * inv);
        if (!(s > 1e-12)) s = 1.0; // constant channel: center only
    }
    return n;
}

Dataset normalize(const Dataset& data, std::span<const std::size_t> train_ids)
{
    Dataset out = data;
    out.normalization = fit_normalization(data, train_ids);
    const auto& n = out.normalization;
    for (auto& s : out.samples)
        for (std::size_t c = 0; c < out.channels; ++c) s.x[c] = (s.x[c] - n.mean[c]) / n.stddev[c];
    return out;
}

namespace {

using TrialMap = std::map<std::pair<std::size_t, std::size_t>, std::vector<std::size_t>>;

TrialMap trials_of(const Dataset& data)
{
    TrialMap trials;
    for (std::size_t i = 0; i < data.samples.size(); ++i)
        trials[{data.samples[i].subject, data.samples[i].trial}].push_back(i);
    return trials;
}

// Shuffles the trials not belonging to `skip_subject` and deals whole trials to
// validation, then training.
void deal_trials(const TrialMap& trials, std::size_t skip_subject, double fraction, std::uint64_t seed,
                 SplitPlan& plan)
{
    std::vector<const std::vector<std::size_t>*> pool;
    for (const auto& [key, ids] : trials)
        if (key.first != skip_subject) pool.push_back(&ids);
    Rng rng(seed);
    shuffle_in_place(pool, rng);

    const std::size_t n = pool.size();
    auto n_val = static_cast<std::size_t>(std::floor(static_cast<double>(n) * fraction + 0.5));
    if (n >= 2) n_val = std::clamp<std::size_t>(n_val, 1, n - 1);
    else n_val = 0;
    for (std::size_t k = 0; k < n; ++k) {
        auto& dst = k < n_val ? plan.validation_ids : plan.train_ids;
        dst.insert(dst.end(), pool[k]->begin(), pool[k]->end());
    }
    std::sort(plan.train_ids.begin(), plan.train_ids.end());
    std::sort(plan.validation_ids.begin(), plan.validation_ids.end());
}

} // namespace

std::vector<SplitPlan> loso_splits(const Dataset& data, double validation_fraction, std::uint64_t seed)
{
    if (!(validation_fraction > 0.0 && validation_fraction < 1.0))
        throw ConfigError("validation fraction must lie in (0, 1)");
    if (data.subjects < 2) throw ConfigError("leave-one-subject-out needs at least 2 subjects");

    std::vector<std::vector<std::size_t>> subject_samples(data.subjects);
    for (std::size_t i = 0; i < data.samples.size(); ++i) subject_samples.at(data.samples[i].subject).push_back(i);
    for (std::size_t s = 0; s < data.subjects; ++s)
        if (subject_samples[s].empty()) throw ConfigError("subject " + std::to_string(s) + " has no samples");

    const TrialMap trials = trials_of(data);
    std::vector<SplitPlan> plans;
    for (std::size_t test = 0; test < data.subjects; ++test) {
        SplitPlan plan;
        plan.test_subject = test;
        plan.test_ids = subject_samples[test];
        deal_trials(trials, test, validation_fraction, derive_seed(seed, test), plan);
        plans.push_back(std::move(plan));
    }
    return plans;
}

SplitPlan trial_split(const Dataset& data, double validation_fraction, std::uint64_t seed)
{
    if (!(validation_fraction > 0.0 && validation_fraction < 1.0))
        throw ConfigError("validation fraction must lie in (0, 1)");
    SplitPlan plan;
    plan.test_subject = data.subjects;
    deal_trials(trials_of(data), data.subjects, validation_fraction, seed, plan);
    return plan;
}

void SyntheticSpec::validate() const
{
    if (subjects < 1 || classes < 1 || channels < 1 || samples_per_cell < 1)
        throw ConfigError("synthetic spec: all cardinalities must be >= 1");
    if (!(task_strength >= 0.0) || !(subject_strength >= 0.0))
        throw ConfigError("synthetic spec: strengths must be >= 0");
    if (!(noise >= 0.0)) throw ConfigError("synthetic spec: noise must be >= 0");
    if (subject_rank > channels) throw ConfigError("synthetic spec: subject_rank must be <= channels");
}

namespace {

nn::Matrix unit_rows(std::size_t rows, std::size_t cols, Rng& rng)
{
    nn::Matrix m(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
        double norm = 0.0;
        while (norm < 1e-12) {
            norm = 0.0;
            for (double& v : m.row(r)) {
                v = rng.normal();
                norm += v * v;
            }
            norm = std::sqrt(norm);
        }
        for (double& v : m.row(r)) v /= norm;
    }
    return m;
}

} // namespace

SyntheticData generate_synthetic(const SyntheticSpec& spec)
{
    spec.validate();
    Rng rng(spec.seed);
    SyntheticData out;
    out.spec = spec;
    out.task_templates = unit_rows(spec.classes, spec.channels, rng);
    const std::size_t rank = spec.subject_rank ? spec.subject_rank : spec.channels;
    if (rank == spec.channels) {
        out.subject_offsets = unit_rows(spec.subjects, spec.channels, rng);
    } else {
        const nn::Matrix basis = unit_rows(rank, spec.channels, rng);
        const nn::Matrix coeff = unit_rows(spec.subjects, rank, rng);
        out.subject_offsets = nn::Matrix(spec.subjects, spec.channels);
        for (std::size_t s = 0; s < spec.subjects; ++s) {
            double norm = 0.0;
            for (std::size_t c = 0; c < spec.channels; ++c) {
                double v = 0.0;
                for (std::size_t r = 0; r < rank; ++r) v += coeff(s, r) * basis(r, c);
                out.subject_offsets(s, c) = v;
                norm += v * v;
            }
            norm = std::sqrt(norm);
            if (norm > 0.0)
                for (double& v : out.subject_offsets.row(s)) v /= norm;
        }
    }

    Dataset& d = out.dataset;
    d.channels = spec.channels;
    d.classes = spec.classes;
    d.subjects = spec.subjects;
    d.samples.reserve(spec.subjects * spec.classes * spec.samples_per_cell);
    for (std::size_t s = 0; s < spec.subjects; ++s) {
        for (std::size_t y = 0; y < spec.classes; ++y) {
            for (std::size_t i = 0; i < spec.samples_per_cell; ++i) {
                Sample smp;
                smp.subject = s;
                smp.label = y;
                smp.trial = y;
                smp.t = static_cast<double>(i);
                smp.x.resize(spec.channels);
                for (std::size_t c = 0; c < spec.channels; ++c) {
                    const double eps = spec.noise > 0.0 ? spec.noise * rng.normal() : 0.0;
                    smp.x[c] = spec.task_strength * out.task_templates(y, c) +
                               spec.subject_strength * out.subject_offsets(s, c) + eps;
                }
                d.samples.push_back(std::move(smp));
            }
        }
    }
    return out;
}

void write_synthetic_sidecar(std::ostream& out, const SyntheticData& data)
{
    const auto rows = [](const nn::Matrix& m) {
        nlohmann::json j = nlohmann::json::array();
        for (std::size_t r = 0; r < m.rows; ++r) {
            const auto row = m.row(r);
            j.push_back(std::vector<double>(row.begin(), row.end()));
        }
        return j;
    };
    const auto& s = data.spec;
    nlohmann::json j;
    j["spec"] = {{"subjects", s.subjects},
                 {"classes", s.classes},
                 {"channels", s.channels},
                 {"samples_per_cell", s.samples_per_cell},
                 {"task_strength", s.task_strength},
                 {"subject_strength", s.subject_strength},
                 {"noise", s.noise},
                 {"subject_rank", s.subject_rank},
                 {"seed", s.seed}};
    j["task_templates"] = rows(data.task_templates);
    j["subject_offsets"] = rows(data.subject_offsets);
    out << j.dump(2) << '\n';
}

} // namespace dacae

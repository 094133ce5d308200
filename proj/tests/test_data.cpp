#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>

#include <json.hpp>

#include "dacae/classifiers.hpp"
#include "dacae/data.hpp"
#include "dacae/errors.hpp"

using namespace dacae;

namespace {

RawChannel channel(const std::string& name, double rate, double seconds, double offset)
{
    RawChannel c;
    c.name = name;
    const auto n = static_cast<std::size_t>(seconds * rate);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / rate;
        c.times.push_back(t);
        c.values.push_back(offset + std::sin(t + offset));
    }
    return c;
}

// The stress protocol: relax, physical, relax, cognitive, relax, emotional, relax.
std::vector<RawTrial> protocol(std::size_t subjects)
{
    const std::size_t labels[] = {0, 1, 0, 2, 0, 3, 0};
    const double rates[] = {4.0, 4.0, 32.0, 32.0, 32.0, 1.0, 0.5};
    std::vector<RawTrial> out;
    for (std::size_t s = 0; s < subjects; ++s)
        for (std::size_t k = 0; k < 7; ++k) {
            RawTrial t;
            t.subject = 100 + s;
            t.trial = k;
            t.label = labels[k];
            const ChannelMap names = default_channel_map();
            for (std::size_t c = 0; c < names.size(); ++c)
                t.channels.push_back(channel(names[c], rates[c], 6.0 + static_cast<double>(k), 0.1 * c + s));
            out.push_back(std::move(t));
        }
    return out;
}

std::string serialize(const Dataset& d)
{
    std::ostringstream os;
    write_interchange_csv(os, d);
    return os.str();
}

double probe(const Dataset& d, bool subject_target)
{
    std::vector<Vector> trf, tef;
    std::vector<std::size_t> trl, tel;
    for (std::size_t i = 0; i < d.samples.size(); ++i) {
        const Sample& s = d.samples[i];
        const std::size_t y = subject_target ? s.subject : s.label;
        if (i % 2 == 0) {
            trf.push_back(s.x);
            trl.push_back(y);
        } else {
            tef.push_back(s.x);
            tel.push_back(y);
        }
    }
    const std::size_t classes = subject_target ? d.subjects : d.classes;
    const FittedClassifier f = fit_classifier(ClassifierKind::LDA, trf, trl, classes, 0);
    return accuracy(f, tef, tel);
}

} // namespace

TEST_CASE("resampling to 1 Hz")
{
    std::vector<double> t, ramp, flat;
    for (int i = 0; i < 16; ++i) {
        t.push_back(i / 8.0);
        ramp.push_back(i % 8);
        flat.push_back(4.25);
    }
    const auto r = resample_to_1hz(t, ramp, 2);
    CHECK(r[0] == 3.5);
    CHECK(r[1] == 3.5);
    for (double v : resample_to_1hz(t, flat, 2)) CHECK(v == 4.25);

    // Slow channel: zero-order hold between samples.
    const std::vector<double> st{0.0, 2.0}, sv{1.0, 5.0};
    CHECK(resample_to_1hz(st, sv, 4) == std::vector<double>{1.0, 1.0, 5.0, 5.0});
    // A grid point before the first sample takes the first sample.
    const std::vector<double> lt{1.5}, lv{7.0};
    CHECK(resample_to_1hz(lt, lv, 3) == std::vector<double>{7.0, 7.0, 7.0});
}

TEST_CASE("ingest the stress protocol")
{
    const auto raw = protocol(20);
    CHECK(raw.size() == 140);
    const Dataset d = ingest(raw, default_channel_map());
    CHECK(d.subjects == 20);
    CHECK(d.channels == 7);
    CHECK(d.classes == 4);
    d.validate();

    std::map<std::size_t, std::set<std::size_t>> trials;
    std::map<std::size_t, std::set<std::size_t>> labels;
    for (const auto& s : d.samples) {
        trials[s.subject].insert(s.trial);
        labels[s.subject].insert(s.label);
    }
    CHECK(trials.size() == 20);
    for (const auto& [s, ts] : trials) {
        CHECK(ts == std::set<std::size_t>{0, 1, 3, 5}); // later relaxation trials dropped
        CHECK(labels[s] == std::set<std::size_t>{0, 1, 2, 3});
    }
    // Trial 0 lasts 6 s: the slowest channel (0.5 Hz) ends at t = 4, so 5 grid points.
    std::size_t n0 = 0;
    for (const auto& s : d.samples)
        if (s.subject == 0 && s.trial == 0) ++n0;
    CHECK(n0 == 5);

    CHECK(serialize(ingest(raw, default_channel_map())) == serialize(d));
}

TEST_CASE("ingest errors")
{
    auto raw = protocol(2);
    auto missing = raw;
    missing[3].channels.erase(missing[3].channels.begin() + 5);
    try {
        ingest(missing, default_channel_map());
        FAIL("expected IngestError");
    } catch (const IngestError& e) {
        CHECK(std::string(e.what()).find("'hr'") != std::string::npos);
    }
    auto unlabeled = raw;
    unlabeled[1].label.reset();
    CHECK_THROWS_AS(ingest(unlabeled, default_channel_map()), IngestError);

    auto unbalanced = raw;
    unbalanced[1].label = 2; // physical trial relabeled as cognitive
    CHECK_THROWS_AS(ingest(unbalanced, default_channel_map()), IngestError);
}

TEST_CASE("raw csv reader")
{
    std::istringstream in("subject,trial,label,channel,t,value\n"
                          "3,0,1,eda,0,1.5\n"
                          "3,0,1,eda,0.5,2.5\n"
                          "3,0,1,hr,0,70\n"
                          "3,1,,hr,0,71\n");
    const auto trials = read_raw_csv(in);
    REQUIRE(trials.size() == 2);
    CHECK(trials[0].subject == 3);
    CHECK(trials[0].label == std::optional<std::size_t>(1));
    CHECK(trials[0].channels.size() == 2);
    CHECK(trials[0].channels[0].values == std::vector<double>{1.5, 2.5});
    CHECK_FALSE(trials[1].label.has_value());

    std::istringstream bad("subject,trial,label,channel,t,value\n1,0,1,eda,x,2\n");
    CHECK_THROWS_AS(read_raw_csv(bad), IoError);
    std::istringstream header("a,b\n");
    CHECK_THROWS_AS(read_raw_csv(header), IoError);
}

TEST_CASE("interchange csv round trip")
{
    SyntheticSpec spec;
    spec.subjects = 3;
    spec.samples_per_cell = 5;
    spec.seed = 4;
    const Dataset d = generate_synthetic(spec).dataset;
    const std::string text = serialize(d);
    CHECK(text.rfind("subject,trial,label,t,ch0,ch1,ch2,ch3,ch4,ch5,ch6\n", 0) == 0);
    std::istringstream in(text);
    const Dataset back = read_interchange_csv(in, 4, 3);
    CHECK(back.samples == d.samples);
    CHECK(serialize(back) == text);

    std::istringstream bad("subject,trial,label,t,ch0\n0,0,0,0,abc\n");
    CHECK_THROWS_AS(read_interchange_csv(bad), IoError);
}

TEST_CASE("normalization")
{
    Dataset d;
    d.channels = 2;
    d.classes = 1;
    d.subjects = 1;
    for (double v : {3.0, 7.0, 3.0, 7.0}) d.samples.push_back(Sample{{v, 4.0}, 0, 0, 0, 0.0});
    d.samples.push_back(Sample{{9.0, 4.0}, 0, 0, 1, 0.0});
    const std::vector<std::size_t> train{0, 1, 2, 3};
    const Normalization n = fit_normalization(d, train);
    CHECK(n.mean[0] == 5.0);
    CHECK(n.stddev[0] == 2.0);
    CHECK(n.stddev[1] == 1.0);
    const Dataset z = normalize(d, train);
    CHECK(z.samples[4].x[0] == 2.0);
    CHECK(z.samples[4].x[1] == 0.0);
    CHECK(z.normalization == n);

    const Dataset again = normalize(z, train);
    for (std::size_t i = 0; i < z.samples.size(); ++i)
        for (std::size_t c = 0; c < 2; ++c) CHECK(std::abs(again.samples[i].x[c] - z.samples[i].x[c]) < 1e-12);

    CHECK_THROWS_AS(fit_normalization(d, std::vector<std::size_t>{}), ConfigError);
}

TEST_CASE("leave-one-subject-out splits")
{
    const Dataset d = ingest(protocol(20), default_channel_map());
    const auto plans = loso_splits(d, 0.1, 42);
    REQUIRE(plans.size() == 20);

    for (std::size_t k = 0; k < plans.size(); ++k) {
        const SplitPlan& p = plans[k];
        CHECK(p.test_subject == k);
        std::set<std::pair<std::size_t, std::size_t>> val_trials, train_trials;
        for (std::size_t i : p.validation_ids) val_trials.insert({d.samples[i].subject, d.samples[i].trial});
        for (std::size_t i : p.train_ids) train_trials.insert({d.samples[i].subject, d.samples[i].trial});
        CHECK(val_trials.size() == 8);
        CHECK(train_trials.size() == 68);
        for (const auto& t : val_trials) CHECK(train_trials.count(t) == 0);

        std::vector<int> seen(d.samples.size(), 0);
        for (std::size_t i : p.train_ids) ++seen[i];
        for (std::size_t i : p.validation_ids) ++seen[i];
        for (std::size_t i : p.test_ids) ++seen[i];
        for (std::size_t i = 0; i < d.samples.size(); ++i) {
            CHECK(seen[i] == 1);
            CHECK((d.samples[i].subject == k) == (std::find(p.test_ids.begin(), p.test_ids.end(), i) !=
                                                   p.test_ids.end()));
        }
    }
    CHECK(loso_splits(d, 0.1, 42).front().validation_ids == plans.front().validation_ids);
    CHECK(loso_splits(d, 0.1, 43).front().validation_ids != plans.front().validation_ids);

    CHECK_THROWS_AS(loso_splits(d, 0.0, 1), ConfigError);
    CHECK_THROWS_AS(loso_splits(d, 1.0, 1), ConfigError);
}

TEST_CASE("trial split keeps trials whole")
{
    const Dataset d = ingest(protocol(5), default_channel_map());
    const SplitPlan p = trial_split(d, 0.1, 3);
    CHECK(p.test_ids.empty());
    CHECK(p.train_ids.size() + p.validation_ids.size() == d.samples.size());
    std::set<std::pair<std::size_t, std::size_t>> val;
    for (std::size_t i : p.validation_ids) val.insert({d.samples[i].subject, d.samples[i].trial});
    CHECK(val.size() == 2); // round(20 * 0.1)
    for (std::size_t i : p.train_ids) CHECK(val.count({d.samples[i].subject, d.samples[i].trial}) == 0);
}

TEST_CASE("synthetic generator")
{
    SyntheticSpec spec;
    spec.seed = 3;
    const SyntheticData syn = generate_synthetic(spec);
    CHECK(syn.dataset.samples.size() == 6 * 4 * 200);
    syn.dataset.validate();
    for (std::size_t r = 0; r < syn.task_templates.rows; ++r) {
        double n = 0.0;
        for (double v : syn.task_templates.row(r)) n += v * v;
        CHECK(n == doctest::Approx(1.0));
    }
    CHECK(generate_synthetic(spec).dataset == syn.dataset);

    SUBCASE("noiseless cells are constant")
    {
        SyntheticSpec s = spec;
        s.noise = 0.0;
        s.samples_per_cell = 5;
        const Dataset d = generate_synthetic(s).dataset;
        for (const auto& a : d.samples)
            for (const auto& b : d.samples)
                if (a.subject == b.subject && a.label == b.label) CHECK(a.x == b.x);
    }
    SUBCASE("signal is recoverable")
    {
        SyntheticSpec s = spec;
        s.noise = 0.1;
        s.samples_per_cell = 50;
        CHECK(probe(generate_synthetic(s).dataset, false) >= 0.95);
    }
    SUBCASE("absent factors are unpredictable")
    {
        double subject_acc = 0.0, task_acc = 0.0;
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            SyntheticSpec s = spec;
            s.seed = seed;
            s.samples_per_cell = 100;
            s.subject_strength = 0.0;
            subject_acc += probe(generate_synthetic(s).dataset, true) / 5.0;
            s.subject_strength = 1.0;
            s.task_strength = 0.0;
            task_acc += probe(generate_synthetic(s).dataset, false) / 5.0;
        }
        CHECK(subject_acc <= 1.0 / 6.0 + 0.05);
        CHECK(task_acc <= 0.25 + 0.05);
    }
    SUBCASE("low-rank subject offsets")
    {
        SyntheticSpec s = spec;
        s.subject_rank = 2;
        const SyntheticData low = generate_synthetic(s);
        // Any three offset rows are linearly dependent in a 2-d subspace: Gram determinant vanishes.
        const auto& U = low.subject_offsets;
        auto dot = [&](std::size_t a, std::size_t b) {
            double t = 0.0;
            for (std::size_t c = 0; c < U.cols; ++c) t += U(a, c) * U(b, c);
            return t;
        };
        const double g[3][3] = {{dot(0, 0), dot(0, 1), dot(0, 2)},
                                {dot(1, 0), dot(1, 1), dot(1, 2)},
                                {dot(2, 0), dot(2, 1), dot(2, 2)}};
        const double det = g[0][0] * (g[1][1] * g[2][2] - g[1][2] * g[2][1]) -
                           g[0][1] * (g[1][0] * g[2][2] - g[1][2] * g[2][0]) +
                           g[0][2] * (g[1][0] * g[2][1] - g[1][1] * g[2][0]);
        CHECK(std::abs(det) < 1e-12);
        SyntheticSpec bad = s;
        bad.subject_rank = 8;
        CHECK_THROWS_AS(bad.validate(), ConfigError);
    }
    SUBCASE("sidecar")
    {
        std::ostringstream os;
        write_synthetic_sidecar(os, syn);
        const auto j = nlohmann::json::parse(os.str());
        CHECK(j.at("spec").at("subjects").get<std::size_t>() == 6);
        CHECK(j.at("task_templates").size() == 4);
        CHECK(j.at("subject_offsets").size() == 6);
        CHECK(j.at("subject_offsets")[2][3].get<double>() == syn.subject_offsets(2, 3));
    }
}

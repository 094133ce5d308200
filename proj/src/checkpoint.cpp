#include "dacae/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "dacae/errors.hpp"

namespace dacae {

using nlohmann::json;

namespace {

json to_json(const nn::Matrix& m)
{
    return {{"rows", m.rows}, {"cols", m.cols}, {"data", m.data}};
}

nn::Matrix matrix_from(const json& j)
{
    nn::Matrix m;
    m.rows = j.at("rows").get<std::size_t>();
    m.cols = j.at("cols").get<std::size_t>();
    m.data = j.at("data").get<std::vector<double>>();
    if (m.data.size() != m.rows * m.cols) throw IoError("checkpoint: matrix size mismatch");
    return m;
}

json to_json(const nn::Mlp& net)
{
    json layers = json::array();
    for (const auto& l : net.layers)
        layers.push_back({{"weight", to_json(l.weight)},
                          {"bias", l.bias},
                          {"activation", l.activation == nn::Activation::ReLU ? "relu" : "none"}});
    return layers;
}

nn::Mlp mlp_from(const json& j)
{
    nn::Mlp net;
    for (const auto& l : j) {
        nn::DenseLayer layer;
        layer.weight = matrix_from(l.at("weight"));
        layer.bias = l.at("bias").get<std::vector<double>>();
        const auto act = l.at("activation").get<std::string>();
        if (act == "relu")
            layer.activation = nn::Activation::ReLU;
        else if (act == "none")
            layer.activation = nn::Activation::None;
        else
            throw IoError("checkpoint: unknown activation '" + act + "'");
        net.layers.push_back(std::move(layer));
    }
    try {
        net.validate();
    } catch (const ContractViolation& e) {
        throw IoError(std::string("checkpoint: ") + e.what());
    }
    return net;
}

json to_json(const HyperConfig& c)
{
    return {{"variant", std::string(to_string(c.variant))},
            {"lambda_a", c.lambda_a},
            {"lambda_n", c.lambda_n},
            {"r_n", c.r_n},
            {"latent_dim", c.latent_dim},
            {"hidden_dim", c.hidden_dim},
            {"learning_rate", c.sgd.learning_rate},
            {"batch_size", c.sgd.batch_size},
            {"epochs", c.sgd.epochs},
            {"seed", c.sgd.seed}};
}

HyperConfig hyper_from(const json& j)
{
    HyperConfig c;
    c.variant = parse_variant(j.at("variant").get<std::string>());
    c.lambda_a = j.at("lambda_a").get<double>();
    c.lambda_n = j.at("lambda_n").get<double>();
    c.r_n = j.at("r_n").get<double>();
    c.latent_dim = j.at("latent_dim").get<std::size_t>();
    c.hidden_dim = j.at("hidden_dim").get<std::size_t>();
    c.sgd.learning_rate = j.at("learning_rate").get<double>();
    c.sgd.batch_size = j.at("batch_size").get<std::size_t>();
    c.sgd.epochs = j.at("epochs").get<std::size_t>();
    c.sgd.seed = j.at("seed").get<std::uint64_t>();
    return c;
}

json to_json(const Standardizer& s)
{
    return {{"mean", s.mean}, {"scale", s.scale}};
}

Standardizer standardizer_from(const json& j)
{
    Standardizer s;
    s.mean = j.at("mean").get<std::vector<double>>();
    s.scale = j.at("scale").get<std::vector<double>>();
    return s;
}

json to_json(const FittedClassifier& f)
{
    json j = {{"kind", std::string(to_string(f.kind))}, {"dim", f.dim}, {"classes", f.classes}};
    if (const auto* m = std::get_if<ConstantModel>(&f.model)) {
        j["model"] = {{"type", "constant"}, {"label", m->label}};
    } else if (const auto* m = std::get_if<MlpModel>(&f.model)) {
        j["model"] = {{"type", "mlp"}, {"net", to_json(m->params.net)}, {"standardizer", to_json(m->standardizer)}};
    } else if (const auto* m = std::get_if<KnnModel>(&f.model)) {
        j["model"] = {{"type", "knn"}, {"k", m->k}, {"features", m->features}, {"labels", m->labels}};
    } else if (const auto* m = std::get_if<TreeModel>(&f.model)) {
        json nodes = json::array();
        for (const auto& n : m->nodes) {
            json node = {{"label", n.label}, {"depth", n.depth}};
            if (!n.is_leaf()) {
                node["feature"] = n.feature;
                node["threshold"] = n.threshold;
                node["left"] = n.left;
                node["right"] = n.right;
            }
            nodes.push_back(std::move(node));
        }
        j["model"] = {{"type", "tree"}, {"nodes", nodes}};
    } else if (const auto* m = std::get_if<LinearModel>(&f.model)) {
        j["model"] = {{"type", "linear"},
                      {"weights", to_json(m->weights)},
                      {"bias", m->bias},
                      {"standardizer", to_json(m->standardizer)}};
    }
    return j;
}

FittedClassifier classifier_from(const json& j)
{
    FittedClassifier f;
    f.kind = parse_classifier(j.at("kind").get<std::string>());
    f.dim = j.at("dim").get<std::size_t>();
    f.classes = j.at("classes").get<std::size_t>();
    const json& m = j.at("model");
    const auto type = m.at("type").get<std::string>();
    if (type == "constant") {
        f.model = ConstantModel{m.at("label").get<std::size_t>()};
    } else if (type == "mlp") {
        f.model = MlpModel{ClassifierParams{mlp_from(m.at("net"))}, standardizer_from(m.at("standardizer"))};
    } else if (type == "knn") {
        KnnModel k;
        k.k = m.at("k").get<std::size_t>();
        k.features = m.at("features").get<std::vector<Vector>>();
        k.labels = m.at("labels").get<std::vector<std::size_t>>();
        f.model = std::move(k);
    } else if (type == "tree") {
        TreeModel t;
        for (const auto& n : m.at("nodes")) {
            TreeNode node;
            node.label = n.at("label").get<std::size_t>();
            node.depth = n.at("depth").get<std::size_t>();
            if (n.contains("feature")) {
                node.feature = n.at("feature").get<std::size_t>();
                node.threshold = n.at("threshold").get<double>();
                node.left = n.at("left").get<std::size_t>();
                node.right = n.at("right").get<std::size_t>();
            }
            t.nodes.push_back(node);
        }
        for (const auto& n : t.nodes)
            if (!n.is_leaf() && (n.left >= t.nodes.size() || n.right >= t.nodes.size()))
                throw IoError("checkpoint: tree child index out of range");
        f.model = std::move(t);
    } else if (type == "linear") {
        f.model = LinearModel{matrix_from(m.at("weights")), m.at("bias").get<std::vector<double>>(),
                              standardizer_from(m.at("standardizer"))};
    } else {
        throw IoError("checkpoint: unknown classifier model '" + type + "'");
    }
    return f;
}

json to_json(const Checkpoint& c)
{
    json classifiers = json::array();
    for (const auto& f : c.classifiers) classifiers.push_back(to_json(f));
    return {{"format", "dacae-checkpoint"},
            {"version", kCheckpointVersion},
            {"config", to_json(c.config)},
            {"shape",
             {{"channels", c.params.channels},
              {"subjects", c.params.subjects},
              {"latent_dim", c.params.latent_dim},
              {"adversary_dim", c.params.adversary_dim},
              {"nuisance_dim", c.params.nuisance_dim}}},
            {"encoder", to_json(c.params.encoder)},
            {"decoder", to_json(c.params.decoder)},
            {"adversary", to_json(c.params.adversary)},
            {"nuisance", to_json(c.params.nuisance)},
            {"normalization", {{"mean", c.normalization.mean}, {"stddev", c.normalization.stddev}}},
            {"classifiers", classifiers}};
}

} // namespace

std::string checkpoint_text(const Checkpoint& checkpoint)
{
    return to_json(checkpoint).dump(1);
}

void save_checkpoint(std::ostream& out, const Checkpoint& checkpoint)
{
    out << checkpoint_text(checkpoint) << '\n';
    if (!out) throw IoError("checkpoint: write failed");
}

void save_checkpoint(const std::string& path, const Checkpoint& checkpoint)
{
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    save_checkpoint(out, checkpoint);
}

Checkpoint load_checkpoint(std::istream& in)
{
    try {
        const json j = json::parse(in);
        if (j.at("format").get<std::string>() != "dacae-checkpoint") throw IoError("checkpoint: wrong format tag");
        if (j.at("version").get<int>() != kCheckpointVersion) throw IoError("checkpoint: unsupported version");
        Checkpoint c;
        c.config = hyper_from(j.at("config"));
        const json& shape = j.at("shape");
        c.params.channels = shape.at("channels").get<std::size_t>();
        c.params.subjects = shape.at("subjects").get<std::size_t>();
        c.params.latent_dim = shape.at("latent_dim").get<std::size_t>();
        c.params.adversary_dim = shape.at("adversary_dim").get<std::size_t>();
        c.params.nuisance_dim = shape.at("nuisance_dim").get<std::size_t>();
        c.params.encoder = mlp_from(j.at("encoder"));
        c.params.decoder = mlp_from(j.at("decoder"));
        c.params.adversary = mlp_from(j.at("adversary"));
        c.params.nuisance = mlp_from(j.at("nuisance"));
        c.normalization.mean = j.at("normalization").at("mean").get<std::vector<double>>();
        c.normalization.stddev = j.at("normalization").at("stddev").get<std::vector<double>>();
        for (const auto& f : j.at("classifiers")) c.classifiers.push_back(classifier_from(f));
        try {
            c.params.validate();
        } catch (const ContractViolation& e) {
            throw IoError(std::string("checkpoint: ") + e.what());
        }
        return c;
    } catch (const json::exception& e) {
        throw IoError(std::string("checkpoint: malformed content: ") + e.what());
    } catch (const ConfigError& e) {
        throw IoError(std::string("checkpoint: ") + e.what());
    }
}

Checkpoint load_checkpoint(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    return load_checkpoint(in);
}

} // namespace dacae

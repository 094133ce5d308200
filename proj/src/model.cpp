#include "dacae/model.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <string>

#include "dacae/errors.hpp"

namespace dacae {

namespace {

constexpr std::array<Variant, 5> kVariants{Variant::AE, Variant::cAE, Variant::AcAE, Variant::DcAE, Variant::DAcAE};

std::string lower(std::string_view s)
{
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

void fill_decoder_input(Vector& in, std::span<const double> z, std::size_t subjects, std::size_t subject,
                        bool conditioned)
{
    in.assign(z.size() + subjects, 0.0);
    std::copy(z.begin(), z.end(), in.begin());
    if (conditioned) in[z.size() + subject] = 1.0;
}

void check_subject(const DacaeParams& p, std::size_t subject)
{
    if (subject >= p.subjects)
        throw ContractViolation("subject index " + std::to_string(subject) + " out of range " +
                                std::to_string(p.subjects));
}

} // namespace

std::string_view to_string(Variant v)
{
    switch (v) {
    case Variant::AE: return "AE";
    case Variant::cAE: return "cAE";
    case Variant::AcAE: return "A-cAE";
    case Variant::DcAE: return "D-cAE";
    case Variant::DAcAE: return "DA-cAE";
    }
    return "?";
}

Variant parse_variant(std::string_view name)
{
    const std::string n = lower(name);
    for (Variant v : kVariants)
        if (lower(to_string(v)) == n) return v;
    if (n == "acae") return Variant::AcAE;
    if (n == "dcae") return Variant::DcAE;
    if (n == "dacae") return Variant::DAcAE;
    throw ConfigError("unknown model variant '" + std::string(name) + "'");
}

std::span<const Variant> all_variants()
{
    return kVariants;
}

LatentSplit split_latent(std::size_t latent_dim, double r_n)
{
    const auto n = static_cast<std::size_t>(std::floor(static_cast<double>(latent_dim) * r_n + 0.5));
    const std::size_t dn = std::min(n, latent_dim);
    return {latent_dim - dn, dn};
}

void HyperConfig::validate() const
{
    if (!(std::isfinite(lambda_a) && lambda_a >= 0.0)) throw ConfigError("lambda_a must be finite and >= 0");
    if (!(std::isfinite(lambda_n) && lambda_n >= 0.0)) throw ConfigError("lambda_n must be finite and >= 0");
    if (!(r_n >= 0.0 && r_n < 1.0)) throw ConfigError("r_n must lie in [0, 1)");
    if (latent_dim < 1) throw ConfigError("latent_dim must be >= 1");
    if (hidden_dim < 1) throw ConfigError("hidden_dim must be >= 1");
    sgd.validate();
}

HyperConfig HyperConfig::effective() const
{
    HyperConfig c = *this;
    switch (variant) {
    case Variant::AE:
    case Variant::cAE:
        c.lambda_a = 0.0;
        c.lambda_n = 0.0;
        c.r_n = 0.0;
        break;
    case Variant::AcAE:
        c.lambda_n = 0.0;
        c.r_n = 0.0;
        break;
    case Variant::DcAE: c.lambda_a = 0.0; break;
    case Variant::DAcAE: break;
    }
    return c;
}

Vector LatentCode::full() const
{
    Vector z;
    z.reserve(z_a.size() + z_n.size());
    z.insert(z.end(), z_a.begin(), z_a.end());
    z.insert(z.end(), z_n.begin(), z_n.end());
    return z;
}

void DacaeParams::validate() const
{
    encoder.validate();
    decoder.validate();
    adversary.validate();
    nuisance.validate();
    if (adversary_dim + nuisance_dim != latent_dim) throw ContractViolation("latent split does not sum to d");
    if (encoder.in_dim() != channels || encoder.out_dim() != latent_dim)
        throw ContractViolation("encoder shape does not match C -> d");
    if (decoder.in_dim() != latent_dim + subjects || decoder.out_dim() != channels)
        throw ContractViolation("decoder shape does not match d + S -> C");
    if (adversary.in_dim() != adversary_dim || adversary.out_dim() != subjects)
        throw ContractViolation("adversary shape does not match d_a -> S");
    if (nuisance.in_dim() != nuisance_dim || nuisance.out_dim() != subjects)
        throw ContractViolation("nuisance shape does not match d_n -> S");
}

DacaeParams init_params(std::size_t channels, std::size_t subjects, const HyperConfig& config, std::uint64_t seed)
{
    const HyperConfig c = config.effective();
    c.validate();
    if (channels < 1) throw ConfigError("channel count must be >= 1");
    if (subjects < 1) throw ConfigError("subject count must be >= 1");
    const LatentSplit split = split_latent(c.latent_dim, c.r_n);

    Rng rng(seed);
    DacaeParams p;
    p.channels = channels;
    p.subjects = subjects;
    p.latent_dim = c.latent_dim;
    p.adversary_dim = split.adversary_dim;
    p.nuisance_dim = split.nuisance_dim;

    const std::array<nn::LayerSpec, 2> enc{{{c.hidden_dim, nn::Activation::ReLU}, {c.latent_dim, nn::Activation::None}}};
    const std::array<nn::LayerSpec, 2> dec{{{c.hidden_dim, nn::Activation::ReLU}, {channels, nn::Activation::None}}};
    const std::array<nn::LayerSpec, 1> head{{{subjects, nn::Activation::None}}};
    p.encoder = nn::make_mlp(channels, enc, rng);
    p.decoder = nn::make_mlp(c.latent_dim + subjects, dec, rng);
    p.adversary = nn::make_mlp(split.adversary_dim, head, rng);
    p.nuisance = nn::make_mlp(split.nuisance_dim, head, rng);
    return p;
}

LatentCode split_code(const DacaeParams& params, std::span<const double> z)
{
    if (z.size() != params.latent_dim)
        throw ContractViolation("latent length " + std::to_string(z.size()) + " != d " +
                                std::to_string(params.latent_dim));
    LatentCode code;
    code.z_a.assign(z.begin(), z.begin() + static_cast<std::ptrdiff_t>(params.adversary_dim));
    code.z_n.assign(z.begin() + static_cast<std::ptrdiff_t>(params.adversary_dim), z.end());
    return code;
}

LatentCode encode(const DacaeParams& params, std::span<const double> x)
{
    if (x.size() != params.channels)
        throw ContractViolation("encode: input length " + std::to_string(x.size()) + " != C " +
                                std::to_string(params.channels));
    return split_code(params, nn::forward(params.encoder, x));
}

Vector decode(const DacaeParams& params, const LatentCode& code, std::size_t subject, bool conditioned)
{
    check_subject(params, subject);
    const Vector z = code.full();
    if (z.size() != params.latent_dim) throw ContractViolation("decode: latent length mismatch");
    Vector in;
    fill_decoder_input(in, z, params.subjects, subject, conditioned);
    return nn::forward(params.decoder, in);
}

Vector adversary_logits(const DacaeParams& params, std::span<const double> z_a)
{
    if (z_a.size() != params.adversary_dim) throw ContractViolation("adversary input length != d_a");
    return nn::forward(params.adversary, z_a);
}

Vector nuisance_logits(const DacaeParams& params, std::span<const double> z_n)
{
    if (z_n.size() != params.nuisance_dim) throw ContractViolation("nuisance input length != d_n");
    return nn::forward(params.nuisance, z_n);
}

namespace {

// One pass over the batch. With `grads` null only the loss parts are produced.
LossParts run_objective(const DacaeParams& params, Batch batch, const HyperConfig& config, DacaeGradients* grads)
{
    if (batch.empty()) throw ContractViolation("dacae_loss: empty batch");
    const HyperConfig c = config.effective();
    const bool conditioned = c.conditioned();
    const std::size_t da = params.adversary_dim;

    nn::ForwardTape enc_tape, dec_tape, adv_tape, nui_tape;
    Vector dec_in;
    Vector dz(params.latent_dim);
    double recon = 0.0, ce_a = 0.0, ce_n = 0.0;

    for (const Sample* s : batch) {
        if (s->x.size() != params.channels) throw ContractViolation("dacae_loss: sample has wrong channel count");
        check_subject(params, s->subject);
        const Vector z = nn::forward(params.encoder, s->x, grads ? &enc_tape : nullptr);
        const std::span<const double> z_a(z.data(), da);
        const std::span<const double> z_n(z.data() + da, params.nuisance_dim);

        fill_decoder_input(dec_in, z, params.subjects, s->subject, conditioned);
        const Vector x_hat = nn::forward(params.decoder, dec_in, grads ? &dec_tape : nullptr);
        const nn::LossGrad rec = nn::mse_loss(x_hat, s->x);
        recon += rec.loss;

        const bool adv_path = grads && c.lambda_a != 0.0;
        const bool nui_path = grads && c.lambda_n != 0.0;
        nn::LossGrad la = nn::softmax_cross_entropy(nn::forward(params.adversary, z_a, adv_path ? &adv_tape : nullptr),
                                                    s->subject);
        nn::LossGrad ln = nn::softmax_cross_entropy(nn::forward(params.nuisance, z_n, nui_path ? &nui_tape : nullptr),
                                                    s->subject);
        ce_a += la.loss;
        ce_n += ln.loss;

        if (!grads) continue;
        const Vector g_dec = nn::backward_into(params.decoder, dec_tape, rec.grad, grads->decoder);
        std::copy(g_dec.begin(), g_dec.begin() + static_cast<std::ptrdiff_t>(params.latent_dim), dz.begin());
        if (adv_path) {
            for (double& g : la.grad) g *= -c.lambda_a;
            const Vector g_a = nn::backward_into(params.adversary, adv_tape, la.grad, grads->adversary);
            for (std::size_t i = 0; i < da; ++i) dz[i] += g_a[i];
        }
        if (nui_path) {
            for (double& g : ln.grad) g *= c.lambda_n;
            const Vector g_n = nn::backward_into(params.nuisance, nui_tape, ln.grad, grads->nuisance);
            for (std::size_t i = 0; i < params.nuisance_dim; ++i) dz[da + i] += g_n[i];
        }
        nn::backward_into(params.encoder, enc_tape, dz, grads->encoder);
    }

    const double inv = 1.0 / static_cast<double>(batch.size());
    LossParts parts;
    parts.recon = recon * inv;
    parts.adversary_ce = ce_a * inv;
    parts.nuisance_ce = ce_n * inv;
    parts.total = parts.recon + c.lambda_n * parts.nuisance_ce - c.lambda_a * parts.adversary_ce;
    if (!std::isfinite(parts.total)) throw TrainingDiverged("non-finite DA-cAE loss");
    if (grads) {
        grads->encoder.scale(inv);
        grads->decoder.scale(inv);
        grads->adversary.scale(inv);
        grads->nuisance.scale(inv);
    }
    return parts;
}

} // namespace

LossParts dacae_loss(const DacaeParams& params, Batch batch, const HyperConfig& config)
{
    return run_objective(params, batch, config, nullptr);
}

DacaeGradients dacae_loss_gradients(const DacaeParams& params, Batch batch, const HyperConfig& config,
                                    LossParts* parts)
{
    DacaeGradients g{nn::Gradients::zeros_like(params.encoder), nn::Gradients::zeros_like(params.decoder),
                     nn::Gradients::zeros_like(params.adversary), nn::Gradients::zeros_like(params.nuisance)};
    const LossParts p = run_objective(params, batch, config, &g);
    if (parts) *parts = p;
    return g;
}

Vector classifier_forward(const ClassifierParams& gamma, const LatentCode& code)
{
    const Vector z = code.full();
    if (z.size() != gamma.net.in_dim())
        throw ContractViolation("classifier input length " + std::to_string(z.size()) + " != " +
                                std::to_string(gamma.net.in_dim()));
    return nn::forward(gamma.net, z);
}

} // namespace dacae

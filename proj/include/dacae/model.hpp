#pragma once

// Disentangled adversarial conditional autoencoder.
//
// The encoder maps x in R^C to z in R^d. z is split into an adversary part z_a
// (first d_a dims) and a nuisance part z_n (last d_n dims). A linear adversary
// head and a linear nuisance head both predict the subject from their part; the
// decoder reconstructs x from [z, onehot(s)]. The encoder-decoder objective is
//
//   recon + lambda_n * CE(nuisance) - lambda_a * CE(adversary)
//
// so the encoder pushes subject information out of z_a and into z_n.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "dacae/nn.hpp"
#include "dacae/sample.hpp"

namespace dacae {

using nn::Vector;

enum class Variant { AE, cAE, AcAE, DcAE, DAcAE };

std::string_view to_string(Variant v);
/// Accepts "AE", "cAE", "A-cAE", "D-cAE", "DA-cAE" (case-insensitive). Throws ConfigError.
Variant parse_variant(std::string_view name);
std::span<const Variant> all_variants();

struct LatentSplit {
    std::size_t adversary_dim = 0;
    std::size_t nuisance_dim = 0;
};

/// d_n = round(d * r_n) with ties rounding up, d_a = d - d_n.
LatentSplit split_latent(std::size_t latent_dim, double r_n);

struct HyperConfig {
    double lambda_a = 0.01;
    double lambda_n = 0.005;
    double r_n = 1.0 / 3.0;
    std::size_t latent_dim = 15;
    std::size_t hidden_dim = 15;
    Variant variant = Variant::DAcAE;
    nn::SgdConfig sgd;

    void validate() const;

    /// Applies the variant's forced settings: AE and cAE train without heads
    /// (lambda_a = lambda_n = 0), A-cAE drops the nuisance head, D-cAE drops the
    /// adversary head. Variants without a nuisance head use r_n = 0, so the
    /// adversary head sees the whole latent code.
    HyperConfig effective() const;

    bool conditioned() const { return variant != Variant::AE; }
};

struct LatentCode {
    Vector z_a;
    Vector z_n;

    /// [z_a, z_n]
    Vector full() const;
};

struct DacaeParams {
    nn::Mlp encoder;   // theta: C -> hidden -> d
    nn::Mlp decoder;   // eta:   d + S -> hidden -> C
    nn::Mlp adversary; // phi:   d_a -> S
    nn::Mlp nuisance;  // psi:   d_n -> S
    std::size_t channels = 0;
    std::size_t subjects = 0;
    std::size_t latent_dim = 0;
    std::size_t adversary_dim = 0;
    std::size_t nuisance_dim = 0;

    void validate() const;
    bool operator==(const DacaeParams&) const = default;
};

/// Fresh parameters for `config.effective()` drawn from `seed`.
DacaeParams init_params(std::size_t channels, std::size_t subjects, const HyperConfig& config, std::uint64_t seed);

/// Splits an encoder output into the adversary and nuisance parts.
LatentCode split_code(const DacaeParams& params, std::span<const double> z);

LatentCode encode(const DacaeParams& params, std::span<const double> x);

/// Reconstruction from [z_a, z_n, onehot(s)], or [z_a, z_n, 0] when unconditioned.
Vector decode(const DacaeParams& params, const LatentCode& code, std::size_t subject, bool conditioned);

Vector adversary_logits(const DacaeParams& params, std::span<const double> z_a);
Vector nuisance_logits(const DacaeParams& params, std::span<const double> z_n);

struct LossParts {
    double total = 0.0;
    double recon = 0.0;
    double adversary_ce = 0.0;
    double nuisance_ce = 0.0;
};

/// Batch-mean objective of the encoder-decoder pair. Throws TrainingDiverged on a
/// non-finite value.
LossParts dacae_loss(const DacaeParams& params, Batch batch, const HyperConfig& config);

struct DacaeGradients {
    nn::Gradients encoder;
    nn::Gradients decoder;
    nn::Gradients adversary;
    nn::Gradients nuisance;
};

/// Gradient of `dacae_loss(...).total` with respect to all four parameter groups.
/// Head pathways with a zero weight are skipped entirely.
DacaeGradients dacae_loss_gradients(const DacaeParams& params, Batch batch, const HyperConfig& config,
                                    LossParts* parts = nullptr);

/// Parameter block of the neural-network task classifier.
struct ClassifierParams {
    nn::Mlp net; // d -> ... -> L
};

/// Task logits for the full latent code. Never touches the encoder.
Vector classifier_forward(const ClassifierParams& gamma, const LatentCode& code);

} // namespace dacae

#pragma once

#include <string>
#include <utility>
#include <vector>

#include "dgen/denoiser.hpp"
#include "dgen/sampler.hpp"
#include "dgen/schedule.hpp"
#include "dgen/tensor.hpp"
#include "dgen/trainer.hpp"

namespace dgen {

/// Fixed linear encoder/decoder pair. The block codec averages groups of
/// 2^m adjacent components (decode duplicates them back), so
/// encode(decode(y)) == y exactly and decode(encode(x)) is the orthogonal
/// projection onto blockwise-constant signals.
struct Codec {
    Tensor encode_mat;  // {latent_dim, data_dim}
    Tensor decode_mat;  // {data_dim, latent_dim}
    bool identity = false;  // identity codecs short-circuit to exact copies

    std::size_t data_dim() const { return encode_mat.shape[1]; }
    std::size_t latent_dim() const { return encode_mat.shape[0]; }
};

/// latent_dim = data_dim / 2^m; requires data_dim divisible by 2^m and m >= 1.
Codec make_block_codec(std::size_t data_dim, unsigned m);
Codec make_identity_codec(std::size_t dim);

Tensor encode(const Codec& c, const Tensor& x);
Tensor decode(const Codec& c, const Tensor& y);

/// Label names for the conditioning vocabulary; label id = index.
struct ConditionVocab {
    std::vector<std::string> names;

    std::size_t size() const { return names.size(); }
    /// Throws std::invalid_argument on duplicates or empty names.
    void validate() const;
};

/// `label_id,label_name,embedding...` with one row per label; the embedding
/// columns come from the trained condition table.
std::string vocab_to_csv(const ConditionVocab& v, const Tensor& cond_table);
std::pair<ConditionVocab, Tensor> vocab_from_csv(const std::string& text);

/// Trains the denoiser on encoded data: every datum is mapped through the
/// codec and the usual training loop runs in latent space (conditioning
/// enabled iff net_cfg.cond_vocab > 0; net_cfg.data_dim is overwritten with
/// the codec's latent width). With the identity codec this is the plain
/// pipeline, bit for bit.
TrainResult train_latent(const std::vector<DataPoint>& dataset,
                         const std::vector<DataPoint>& held_out, const Codec& c,
                         const Schedule& s, const TrainConfig& cfg, DenoiserInit net_cfg);

/// Ancestral sampling in latent space with every reverse step conditioned on
/// the label; final states are decoded to data space (recorded intermediates
/// stay in latent space).
GeneratedSamples generate_conditioned(const DenoiserParams& p, const Codec& c,
                                      const Schedule& s, const SampleRunConfig& cfg,
                                      int label);

}  // namespace dgen

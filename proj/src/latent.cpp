#include "dgen/latent.hpp"

#include <set>
#include <stdexcept>

#include "dgen/textio.hpp"

namespace dgen {

Codec make_block_codec(std::size_t data_dim, unsigned m) {
    if (m < 1) throw std::invalid_argument("make_block_codec: m must be >= 1");
    std::size_t block = std::size_t{1} << m;
    if (data_dim == 0 || data_dim % block != 0)
        throw std::invalid_argument("make_block_codec: data_dim must be a positive multiple of 2^m");
    std::size_t latent = data_dim / block;
    Codec c;
    c.encode_mat = Tensor::zeros({latent, data_dim});
    c.decode_mat = Tensor::zeros({data_dim, latent});
    double inv = 1.0 / static_cast<double>(block);
    for (std::size_t i = 0; i < latent; ++i) {
        for (std::size_t j = i * block; j < (i + 1) * block; ++j) {
            c.encode_mat.data[i * data_dim + j] = inv;
            c.decode_mat.data[j * latent + i] = 1.0;
        }
    }
    return c;
}

Codec make_identity_codec(std::size_t dim) {
    if (dim == 0) throw std::invalid_argument("make_identity_codec: dim must be positive");
    Codec c;
    c.encode_mat = Tensor::zeros({dim, dim});
    c.decode_mat = Tensor::zeros({dim, dim});
    for (std::size_t i = 0; i < dim; ++i) {
        c.encode_mat.data[i * dim + i] = 1.0;
        c.decode_mat.data[i * dim + i] = 1.0;
    }
    c.identity = true;
    return c;
}

namespace {

Tensor matvec(const Tensor& mat, const Tensor& x, const char* what) {
    if (x.numel() != mat.shape[1])
        throw std::invalid_argument(std::string(what) + ": input width mismatch");
    Tensor out = Tensor::zeros({mat.shape[0]});
    for (std::size_t i = 0; i < mat.shape[0]; ++i) {
        double acc = 0.0;
        const double* row = mat.data.data() + i * mat.shape[1];
        for (std::size_t j = 0; j < mat.shape[1]; ++j) acc += row[j] * x.data[j];
        out.data[i] = acc;
    }
    return out;
}

}  // namespace

Tensor encode(const Codec& c, const Tensor& x) {
    if (c.identity) {
        if (x.numel() != c.data_dim())
            throw std::invalid_argument("encode: input width mismatch");
        return x;
    }
    return matvec(c.encode_mat, x, "encode");
}

Tensor decode(const Codec& c, const Tensor& y) {
    if (c.identity) {
        if (y.numel() != c.latent_dim())
            throw std::invalid_argument("decode: input width mismatch");
        return y;
    }
    return matvec(c.decode_mat, y, "decode");
}

void ConditionVocab::validate() const {
    std::set<std::string> seen;
    for (const std::string& n : names) {
        if (n.empty()) throw std::invalid_argument("ConditionVocab: empty label name");
        if (!seen.insert(n).second)
            throw std::invalid_argument("ConditionVocab: duplicate label '" + n + "'");
    }
}

std::string vocab_to_csv(const ConditionVocab& v, const Tensor& cond_table) {
    v.validate();
    if (cond_table.shape.size() != 2 || cond_table.shape[0] != v.size())
        throw std::invalid_argument("vocab_to_csv: table rows must match label count");
    std::size_t dim = cond_table.shape[1];
    std::string out = "label_id,label_name,embedding\n";
    for (std::size_t i = 0; i < v.size(); ++i) {
        out += std::to_string(i) + "," + v.names[i];
        for (std::size_t j = 0; j < dim; ++j)
            out += "," + format_double(cond_table.data[i * dim + j]);
        out += "\n";
    }
    return out;
}

std::pair<ConditionVocab, Tensor> vocab_from_csv(const std::string& text) {
    std::vector<std::string> lines = split_lines(text);
    if (lines.empty() || lines[0].rfind("label_id,label_name,embedding", 0) != 0)
        throw std::invalid_argument("vocab_from_csv: missing header");
    ConditionVocab v;
    std::vector<double> values;
    std::size_t dim = 0;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        std::vector<std::string> f = split_csv_line(lines[i]);
        if (f.size() < 3)
            throw std::invalid_argument("vocab_from_csv: row needs id, name, embedding");
        if (parse_int(f[0]) != static_cast<long long>(i - 1))
            throw std::invalid_argument("vocab_from_csv: label ids must be 0..n-1 in order");
        v.names.push_back(f[1]);
        std::size_t row_dim = f.size() - 2;
        if (i == 1) dim = row_dim;
        else if (row_dim != dim)
            throw std::invalid_argument("vocab_from_csv: ragged embedding rows");
        for (std::size_t j = 2; j < f.size(); ++j) values.push_back(parse_double(f[j]));
    }
    if (v.names.empty()) throw std::invalid_argument("vocab_from_csv: no labels");
    v.validate();
    std::size_t n = v.names.size();
    Tensor table({n, dim}, std::move(values));
    return {std::move(v), std::move(table)};
}

TrainResult train_latent(const std::vector<DataPoint>& dataset,
                         const std::vector<DataPoint>& held_out, const Codec& c,
                         const Schedule& s, const TrainConfig& cfg, DenoiserInit net_cfg) {
    auto encode_all = [&](const std::vector<DataPoint>& src) {
        std::vector<DataPoint> out;
        out.reserve(src.size());
        for (const DataPoint& d : src) out.push_back({encode(c, d.x), d.label});
        return out;
    };
    net_cfg.data_dim = c.latent_dim();
    return train(encode_all(dataset), encode_all(held_out), s, cfg, net_cfg);
}

GeneratedSamples generate_conditioned(const DenoiserParams& p, const Codec& c,
                                      const Schedule& s, const SampleRunConfig& cfg,
                                      int label) {
    if (p.data_dim != c.latent_dim())
        throw std::invalid_argument("generate_conditioned: network width must match codec latent width");
    GeneratedSamples out = generate(p, s, cfg, label);
    for (Tensor& x : out.finals) x = decode(c, x);
    return out;
}

}  // namespace dgen

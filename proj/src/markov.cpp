#include "mtrack/markov.hpp"

#include "mtrack/textio.hpp"

#include <cstdio>

namespace mtrack {

namespace {

std::string block_name(char prefix, Index i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%c_%03ld.csv", prefix, static_cast<long>(i));
    return buf;
}

} // namespace

void MarkovSequence::validate() const {
    if (H.empty()) throw DimensionError("MarkovSequence: no blocks");
    if (M.size() != H.size()) {
        throw DimensionError("MarkovSequence: H has " + std::to_string(H.size()) + " blocks but M has " +
                             std::to_string(M.size()) + "; both must cover the same lags");
    }
    for (std::size_t i = 0; i < H.size(); ++i) {
        require_shape(H[i], p, m, "H_" + std::to_string(i));
        require_shape(M[i], p, m, "M_" + std::to_string(i));
    }
    if (!H_hat.empty() && (H_hat.size() != H.size() || M_hat.size() != M.size()))
        throw DimensionError("MarkovSequence: augmented blocks do not match base lengths");
}

MarkovSequence augment_markov(MarkovSequence seq) {
    seq.validate();
    seq.H_hat.resize(seq.H.size());
    Matrix running = Matrix::Zero(seq.p, seq.m);
    for (std::size_t i = 0; i < seq.H.size(); ++i) {
        running += seq.H[i];
        seq.H_hat[i] = running;
    }
    seq.M_hat = seq.M;
    return seq;
}

void require_markov_lags(const MarkovSequence& seq, Index needed, const std::string& who) {
    if (!seq.augmented()) throw Error(who + ": Markov sequence is not augmented (call augment_markov)");
    if (seq.count() < needed) {
        throw DimensionError(who + ": needs Markov blocks up to lag " + std::to_string(needed) + ", have only up to " +
                             std::to_string(seq.count()));
    }
}

void write_markov(const MarkovSequence& seq, const std::filesystem::path& dir) {
    seq.validate();
    std::filesystem::create_directories(dir);
    for (Index i = 0; i <= seq.count(); ++i) {
        textio::write_matrix_csv(dir / block_name('H', i), seq.H[static_cast<std::size_t>(i)]);
        textio::write_matrix_csv(dir / block_name('M', i), seq.M[static_cast<std::size_t>(i)]);
    }
    textio::write_manifest(dir / "manifest.txt", {{"p", std::to_string(seq.p)},
                                                  {"m", std::to_string(seq.m)},
                                                  {"count", std::to_string(seq.count())},
                                                  {"sha1", markov_content_hash(seq)}});
}

MarkovSequence read_markov(const std::filesystem::path& dir) {
    const auto manifest = textio::read_manifest(dir / "manifest.txt");
    auto field = [&](const char* key) {
        auto it = manifest.find(key);
        if (it == manifest.end()) throw Error(dir.string() + "/manifest.txt: missing '" + key + "'");
        return std::stol(it->second);
    };
    MarkovSequence seq;
    seq.p = field("p");
    seq.m = field("m");
    const Index count = field("count");
    for (Index i = 0; i <= count; ++i) {
        seq.H.push_back(textio::read_matrix_csv(dir / block_name('H', i)));
        seq.M.push_back(textio::read_matrix_csv(dir / block_name('M', i)));
    }
    seq.validate();
    return seq;
}

std::string markov_content_hash(const MarkovSequence& seq) {
    std::string text = "p=" + std::to_string(seq.p) + " m=" + std::to_string(seq.m) + "\n";
    auto dump = [&](const BlockList& blocks) {
        for (const auto& b : blocks) {
            for (Index i = 0; i < b.rows(); ++i)
                for (Index j = 0; j < b.cols(); ++j) text += textio::format_double(b(i, j)) + (j + 1 < b.cols() ? "," : "\n");
        }
    };
    dump(seq.H);
    dump(seq.M);
    return textio::git_blob_sha1(text);
}

} // namespace mtrack

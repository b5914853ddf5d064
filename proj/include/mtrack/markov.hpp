#pragma once

#include "mtrack/common.hpp"

#include <filesystem>
#include <string>

namespace mtrack {

/// Impulse-response blocks of a plant and of its incremental (augmented) form.
///
/// `H[i]` is the response at lag i to a unit input impulse and `M[i]` the response
/// to a unit disturbance impulse. Both are stored over the same index range
/// [0, count]. `H_hat`/`M_hat` are the augmented-system counterparts; they are
/// empty until augment_markov() fills them.
struct MarkovSequence {
    Index p = 0; // outputs
    Index m = 0; // inputs (and disturbance channels)
    BlockList H;
    BlockList M;
    BlockList H_hat;
    BlockList M_hat;

    /// Highest populated lag; H.size() - 1.
    Index count() const { return static_cast<Index>(H.size()) - 1; }
    bool augmented() const { return !H_hat.empty(); }

    /// Structural validation: consistent block shapes, equal H/M length.
    void validate() const;
};

/// Fills H_hat[i] = sum_{j<=i} H[j] and M_hat[i] = M[i]. Calling it twice is a no-op.
MarkovSequence augment_markov(MarkovSequence seq);

/// Throws unless seq is augmented and covers lag `needed`.
void require_markov_lags(const MarkovSequence& seq, Index needed, const std::string& who);

// Directory layout: manifest.txt plus H_###.csv and M_###.csv, one block per file.
void write_markov(const MarkovSequence& seq, const std::filesystem::path& dir);
MarkovSequence read_markov(const std::filesystem::path& dir);

/// Git-style (blob) SHA-1 over the canonical text of H and M.
std::string markov_content_hash(const MarkovSequence& seq);

} // namespace mtrack

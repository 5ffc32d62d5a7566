#pragma once

#include <string>
#include <vector>

#include "memce/dataset.hpp"

namespace memce {

/// A chunk-tagged utterance ready for segmentation.
struct ChunkedUtterance {
  std::vector<std::string> tokens;
  std::vector<Element> elements;
  std::vector<AnonEntity> anonymization;
};

ChunkedUtterance chunked_from_turn(const Turn& turn);

/// Merge-level view of an element: its label stream (chunks contribute their
/// chunk label, bare tokens their POS tag; merged elements concatenate) and
/// the covered token span.
struct MergeElement {
  std::vector<std::string> labels;
  std::size_t start = 0;
  std::size_t length = 0;
};

/// A contiguous token span produced by chunk merging.
struct Segment {
  std::size_t start = 0;
  std::size_t length = 0;
  std::vector<std::string> labels;
  std::vector<AnonEntity> placeholders;
};

/// Merge rules, applied in order:
///   R1  <VP.*> / <VP.*>
///   R2  <PP.*>|<NP.*> / <NP>+
///   R3  <NP.*> / <VB.*>
///   R4  <AD.*> / <NP.*>
/// True iff the suffix of left's label stream matches the rule's left
/// pattern and the prefix of right's label stream matches its right pattern.
bool match_rule(const MergeElement& left, const MergeElement& right, int rule);

/// Applies R1..R4 in order, each rule scanning left to right and merging
/// greedily until it no longer fires. Output segments partition the tokens.
std::vector<Segment> merge_chunks(const ChunkedUtterance& u);

/// Core merge over an explicit element stream (used by merge_chunks and by
/// idempotence checks that re-feed segments).
std::vector<MergeElement> merge_elements(std::vector<MergeElement> elements);

/// Attaches each placeholder to the segment containing its first token. When
/// an entity straddles a segment boundary the spans are repaired so the whole
/// entity sits in the first token's segment.
void align_anonymization(const ChunkedUtterance& u, std::vector<Segment>& segments);

/// One line of bracketed token groups, e.g. "[from Chicago] [to Seattle]".
std::string format_segments(const std::vector<std::string>& tokens,
                            const std::vector<Segment>& segments);

}  // namespace memce

#include "memce/segmentation.hpp"

#include <algorithm>
#include <sstream>

namespace memce {

namespace {

bool has_prefix(const std::string& label, const char* prefix) {
  return label.rfind(prefix, 0) == 0;
}

std::vector<MergeElement> to_merge_elements(const ChunkedUtterance& u) {
  std::vector<MergeElement> out;
  out.reserve(u.elements.size());
  std::size_t expected = 0;
  for (const Element& e : u.elements) {
    if (e.start != expected || e.length == 0)
      throw DataError("elements must contiguously cover the utterance");
    expected = e.start + e.length;
    MergeElement m;
    m.labels = {e.label};
    m.start = e.start;
    m.length = e.length;
    out.push_back(std::move(m));
  }
  if (expected != u.tokens.size())
    throw DataError("elements do not cover all tokens");
  return out;
}

}  // namespace

ChunkedUtterance chunked_from_turn(const Turn& turn) {
  return {turn.tokens, turn.elements, turn.anonymization};
}

bool match_rule(const MergeElement& left, const MergeElement& right, int rule) {
  const std::string& suffix = left.labels.back();
  const std::string& prefix = right.labels.front();
  switch (rule) {
    case 1:
      return has_prefix(suffix, "VP") && has_prefix(prefix, "VP");
    case 2:
      return (has_prefix(suffix, "PP") || has_prefix(suffix, "NP")) && prefix == "NP";
    case 3:
      return has_prefix(suffix, "NP") && has_prefix(prefix, "VB");
    case 4:
      return has_prefix(suffix, "AD") && has_prefix(prefix, "NP");
    default:
      throw std::invalid_argument("unknown merge rule: " + std::to_string(rule));
  }
}

std::vector<MergeElement> merge_elements(std::vector<MergeElement> elements) {
  for (int rule = 1; rule <= 4; ++rule) {
    bool merged = true;
    while (merged) {
      merged = false;
      std::size_t i = 0;
      while (i + 1 < elements.size()) {
        if (match_rule(elements[i], elements[i + 1], rule)) {
          MergeElement& left = elements[i];
          MergeElement& right = elements[i + 1];
          left.labels.insert(left.labels.end(), right.labels.begin(), right.labels.end());
          left.length += right.length;
          elements.erase(elements.begin() + static_cast<std::ptrdiff_t>(i) + 1);
          merged = true;
          // stay at i so the merged element can absorb a following run
        } else {
          ++i;
        }
      }
    }
  }
  return elements;
}

std::vector<Segment> merge_chunks(const ChunkedUtterance& u) {
  std::vector<MergeElement> merged = merge_elements(to_merge_elements(u));
  std::vector<Segment> out;
  out.reserve(merged.size());
  for (MergeElement& m : merged)
    out.push_back({m.start, m.length, std::move(m.labels), {}});
  return out;
}

void align_anonymization(const ChunkedUtterance& u, std::vector<Segment>& segments) {
  for (const AnonEntity& entity : u.anonymization) {
    if (entity.length == 0 || entity.start + entity.length > u.tokens.size())
      throw DataError("placeholder span outside utterance: " + entity.placeholder);

    const std::size_t first = entity.start;
    const std::size_t last = entity.start + entity.length - 1;
    std::size_t host = segments.size();
    for (std::size_t s = 0; s < segments.size(); ++s) {
      if (first >= segments[s].start && first < segments[s].start + segments[s].length) {
        host = s;
        break;
      }
    }
    if (host == segments.size())
      throw DataError("placeholder span not covered by segments: " + entity.placeholder);

    // Repair: pull the entity's tokens into the host segment when the entity
    // straddles one or more following segments.
    while (segments[host].start + segments[host].length <= last) {
      if (host + 1 >= segments.size())
        throw DataError("segments do not cover placeholder: " + entity.placeholder);
      Segment& next = segments[host + 1];
      const std::size_t need = last + 1 - (segments[host].start + segments[host].length);
      const std::size_t take = std::min(need, next.length);
      segments[host].length += take;
      next.start += take;
      next.length -= take;
      if (next.length == 0)
        segments.erase(segments.begin() + static_cast<std::ptrdiff_t>(host) + 1);
    }
    segments[host].placeholders.push_back(entity);
  }
}

std::string format_segments(const std::vector<std::string>& tokens,
                            const std::vector<Segment>& segments) {
  std::ostringstream out;
  for (std::size_t s = 0; s < segments.size(); ++s) {
    if (s > 0) out << " ";
    out << "[";
    for (std::size_t i = 0; i < segments[s].length; ++i) {
      if (i > 0) out << " ";
      out << tokens[segments[s].start + i];
    }
    out << "]";
  }
  return out.str();
}

}  // namespace memce

#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "tdp/error.hpp"

namespace tdp {

// Reserved ordinals for the pre-defined meta nodes. They precede all text
// nodes, whose ordinals count up from zero in textual order.
constexpr int kRootId = -5;
constexpr int kPastRefId = -4;
constexpr int kPresentRefId = -3;
constexpr int kFutureRefId = -2;
constexpr int kDctId = -1;

constexpr std::array<int, 5> kMetaIds = {kRootId, kPastRefId, kPresentRefId,
                                         kFutureRefId, kDctId};

inline bool is_meta_id(int id) { return id < 0; }

enum class NodeKind { Meta, Time, Event };

enum class Subtype {
  // meta
  Root,
  PastRef,
  PresentRef,
  FutureRef,
  Dct,
  // time expressions
  VagueTime,
  AbsoluteConcrete,
  RelativeConcrete,
  // events
  Event,
  State,
  Habitual,
  CompletedEvent,
  OngoingEvent,
  ModalizedEvent,
  GenericHabitual,
  GenericState,
};

constexpr int kNumSubtypes = 16;
// Time + event subtypes, i.e. everything a text span can be labeled with.
constexpr int kNumTextSubtypes = 11;
constexpr int kFirstTextSubtype = static_cast<int>(Subtype::VagueTime);

inline NodeKind kind_of(Subtype s) {
  const int v = static_cast<int>(s);
  if (v <= static_cast<int>(Subtype::Dct)) return NodeKind::Meta;
  if (v <= static_cast<int>(Subtype::RelativeConcrete)) return NodeKind::Time;
  return NodeKind::Event;
}

// Index of a time/event subtype within the 11-way text label set.
inline int text_subtype_index(Subtype s) {
  const int v = static_cast<int>(s) - kFirstTextSubtype;
  require(v >= 0, "text_subtype_index: meta subtype has no text index");
  return v;
}

inline Subtype text_subtype_from_index(int index) {
  require(index >= 0 && index < kNumTextSubtypes,
          "text subtype index out of range: " + std::to_string(index));
  return static_cast<Subtype>(kFirstTextSubtype + index);
}

inline Subtype meta_subtype(int id) {
  switch (id) {
    case kRootId: return Subtype::Root;
    case kPastRefId: return Subtype::PastRef;
    case kPresentRefId: return Subtype::PresentRef;
    case kFutureRefId: return Subtype::FutureRef;
    case kDctId: return Subtype::Dct;
    default: fail("not a meta node id: " + std::to_string(id));
  }
}

inline const char* subtype_name(Subtype s) {
  switch (s) {
    case Subtype::Root: return "root";
    case Subtype::PastRef: return "past-ref";
    case Subtype::PresentRef: return "present-ref";
    case Subtype::FutureRef: return "future-ref";
    case Subtype::Dct: return "dct";
    case Subtype::VagueTime: return "vague-time";
    case Subtype::AbsoluteConcrete: return "absolute-concrete";
    case Subtype::RelativeConcrete: return "relative-concrete";
    case Subtype::Event: return "event";
    case Subtype::State: return "state";
    case Subtype::Habitual: return "habitual";
    case Subtype::CompletedEvent: return "completed-event";
    case Subtype::OngoingEvent: return "ongoing-event";
    case Subtype::ModalizedEvent: return "modalized-event";
    case Subtype::GenericHabitual: return "generic-habitual";
    case Subtype::GenericState: return "generic-state";
  }
  return "?";
}

inline Subtype subtype_from_name(const std::string& name) {
  for (int i = 0; i < kNumSubtypes; ++i) {
    const Subtype s = static_cast<Subtype>(i);
    if (name == subtype_name(s)) return s;
  }
  fail("unknown node subtype: '" + name + "'");
}

enum class Relation { Before, After, Overlap, Includes, DependOn };

constexpr int kNumRelations = 5;

inline const char* relation_name(Relation r) {
  switch (r) {
    case Relation::Before: return "before";
    case Relation::After: return "after";
    case Relation::Overlap: return "overlap";
    case Relation::Includes: return "includes";
    case Relation::DependOn: return "depend-on";
  }
  return "?";
}

inline Relation relation_from_name(const std::string& name) {
  for (int i = 0; i < kNumRelations; ++i) {
    const Relation r = static_cast<Relation>(i);
    if (name == relation_name(r)) return r;
  }
  fail("unknown relation: '" + name + "'");
}

struct Token {
  std::string form;
  std::string pos;
};

// Half-open token range.
struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t length() const { return end - begin; }
  bool contains(std::size_t t) const { return t >= begin && t < end; }
  bool overlaps(const Span& o) const { return begin < o.end && o.begin < end; }
  bool operator==(const Span&) const = default;
  auto operator<=>(const Span&) const = default;
};

// A time expression or event occupying a span of tokens. Meta nodes are
// implicit and never stored in Document::nodes.
struct Node {
  int id = 0;
  Span span;
  Subtype subtype = Subtype::Event;
  int sent_id = 0;

  NodeKind kind() const { return kind_of(subtype); }
};

struct Edge {
  int child = 0;
  int parent = 0;
  Relation relation = Relation::Overlap;

  bool operator==(const Edge&) const = default;
};

struct Document {
  std::string id;
  std::string domain;  // optional; enables stratified splits
  std::string dct_text;
  std::vector<Token> tokens;
  std::vector<Span> sentences;
  std::vector<Node> nodes;
  std::vector<Edge> edges;

  const Node* node_by_id(int id) const {
    if (id < 0 || id >= static_cast<int>(nodes.size())) return nullptr;
    return &nodes[id];
  }

  // Sentence index containing a token position, -1 if out of range.
  int sentence_of(std::size_t token) const {
    for (std::size_t s = 0; s < sentences.size(); ++s)
      if (sentences[s].contains(token)) return static_cast<int>(s);
    return -1;
  }

  bool operator==(const Document&) const = default;
};

inline Subtype node_subtype(const Document& doc, int id) {
  if (is_meta_id(id)) return meta_subtype(id);
  const Node* n = doc.node_by_id(id);
  require(n != nullptr, "unknown node id: " + std::to_string(id));
  return n->subtype;
}

inline NodeKind node_kind(const Document& doc, int id) {
  return kind_of(node_subtype(doc, id));
}

// Checks every structural invariant of a document; throws tdp::Error with a
// description of the first violation. Edge coverage of all nodes is not
// required here (unparsed documents are valid); TemporalTree checks that.
inline void validate_document(const Document& doc) {
  const std::string where = "document '" + doc.id + "': ";

  // Sentences partition [0, tokens).
  std::size_t expect = 0;
  for (std::size_t s = 0; s < doc.sentences.size(); ++s) {
    const Span& sp = doc.sentences[s];
    if (sp.begin != expect || sp.end <= sp.begin)
      fail(where + "sentence " + std::to_string(s) +
           " does not continue the partition at token " +
           std::to_string(expect));
    expect = sp.end;
  }
  if (expect != doc.tokens.size())
    fail(where + "sentences cover " + std::to_string(expect) + " of " +
         std::to_string(doc.tokens.size()) + " tokens");

  for (std::size_t i = 0; i < doc.nodes.size(); ++i) {
    const Node& n = doc.nodes[i];
    if (n.id != static_cast<int>(i))
      fail(where + "node at position " + std::to_string(i) +
           " has ordinal " + std::to_string(n.id));
    if (n.kind() == NodeKind::Meta)
      fail(where + "node " + std::to_string(n.id) +
           " stores a meta subtype; meta nodes are implicit");
    if (n.span.end <= n.span.begin || n.span.end > doc.tokens.size())
      fail(where + "node " + std::to_string(n.id) + " span [" +
           std::to_string(n.span.begin) + "," + std::to_string(n.span.end) +
           ") is empty or out of range");
    const int sent = doc.sentence_of(n.span.begin);
    if (sent < 0 || !(doc.sentences[sent].end >= n.span.end))
      fail(where + "node " + std::to_string(n.id) +
           " span crosses a sentence boundary");
    if (n.sent_id != sent)
      fail(where + "node " + std::to_string(n.id) + " claims sentence " +
           std::to_string(n.sent_id) + " but lies in sentence " +
           std::to_string(sent));
    if (i > 0) {
      const Node& prev = doc.nodes[i - 1];
      if (n.span.begin < prev.span.begin)
        fail(where + "nodes are not sorted by span start at node " +
             std::to_string(n.id));
      if (n.span.overlaps(prev.span))
        fail(where + "node spans overlap: " + std::to_string(prev.id) +
             " and " + std::to_string(n.id));
    }
  }

  std::vector<bool> has_parent(doc.nodes.size(), false);
  for (const Edge& e : doc.edges) {
    if (is_meta_id(e.child))
      fail(where + "edge child is a meta node: " + std::to_string(e.child));
    const Node* child = doc.node_by_id(e.child);
    if (!child)
      fail(where + "edge references unknown child node id " +
           std::to_string(e.child));
    if (e.parent == e.child)
      fail(where + "node " + std::to_string(e.child) + " is its own parent");
    if (is_meta_id(e.parent)) {
      meta_subtype(e.parent);  // throws on a bad reserved id
    } else if (!doc.node_by_id(e.parent)) {
      fail(where + "edge references unknown parent node id " +
           std::to_string(e.parent));
    }
    if (has_parent[e.child])
      fail(where + "node " + std::to_string(e.child) +
           " has more than one parent");
    has_parent[e.child] = true;
    if (e.relation == Relation::DependOn && child->kind() != NodeKind::Time)
      fail(where + "depend-on edge with non-time child " +
           std::to_string(e.child));
    if (child->kind() == NodeKind::Time && !is_meta_id(e.parent) &&
        node_kind(doc, e.parent) != NodeKind::Time)
      fail(where + "time expression " + std::to_string(e.child) +
           " attached to an event");
  }

  // No cycles among the attached nodes.
  for (const Edge& e : doc.edges) {
    int cur = e.parent;
    std::size_t steps = 0;
    while (!is_meta_id(cur)) {
      if (cur == e.child)
        fail(where + "cycle through node " + std::to_string(e.child));
      if (++steps > doc.nodes.size()) break;  // chain ends at unattached node
      const Edge* up = nullptr;
      for (const Edge& f : doc.edges)
        if (f.child == cur) { up = &f; break; }
      if (!up) break;
      cur = up->parent;
    }
  }
}

// Parent and relation assignment for every non-meta node of a document.
class TemporalTree {
 public:
  struct Attachment {
    int parent = kDctId;
    Relation relation = Relation::Overlap;
    bool operator==(const Attachment&) const = default;
  };

  TemporalTree() = default;
  explicit TemporalTree(std::size_t n_nodes)
      : attach_(n_nodes, Attachment{kUnattached, Relation::Overlap}) {}

  static TemporalTree from_document(const Document& doc) {
    TemporalTree t(doc.nodes.size());
    for (const Edge& e : doc.edges) t.set(e.child, e.parent, e.relation);
    for (std::size_t i = 0; i < t.attach_.size(); ++i)
      require(t.attached(static_cast<int>(i)),
              "document '" + doc.id + "': node " + std::to_string(i) +
                  " has no parent edge");
    return t;
  }

  std::size_t size() const { return attach_.size(); }

  void set(int child, int parent, Relation rel) {
    attach_.at(child) = {parent, rel};
  }

  bool attached(int child) const {
    return attach_.at(child).parent != kUnattached;
  }

  const Attachment& at(int child) const { return attach_.at(child); }

  // True if `node` lies in the subtree currently rooted at `of` (following
  // child->parent links from `node` reaches `of`). Meta nodes are never
  // descendants.
  bool is_descendant(int node, int of) const {
    int cur = node;
    std::size_t steps = 0;
    while (!is_meta_id(cur) && steps++ <= attach_.size()) {
      if (cur == of) return true;
      if (!attached(cur)) return false;
      cur = at(cur).parent;
    }
    return false;
  }

  std::vector<Edge> to_edges() const {
    std::vector<Edge> out;
    out.reserve(attach_.size());
    for (std::size_t i = 0; i < attach_.size(); ++i) {
      require(attached(static_cast<int>(i)),
              "tree is incomplete at node " + std::to_string(i));
      out.push_back({static_cast<int>(i), attach_[i].parent,
                     attach_[i].relation});
    }
    return out;
  }

  // Full-tree invariants: complete coverage, acyclicity, every node reaches
  // the (virtual) root above the meta nodes, relation/kind constraints.
  void validate(const Document& doc) const {
    require(attach_.size() == doc.nodes.size(),
            "tree size does not match document node count");
    for (std::size_t i = 0; i < attach_.size(); ++i) {
      const int child = static_cast<int>(i);
      require(attached(child), "node " + std::to_string(i) + " unattached");
      const Attachment& a = at(child);
      require(a.parent != child,
              "node " + std::to_string(i) + " is its own parent");
      if (!is_meta_id(a.parent))
        require(doc.node_by_id(a.parent) != nullptr,
                "unknown parent id " + std::to_string(a.parent));
      const NodeKind ck = doc.nodes[i].kind();
      if (a.relation == Relation::DependOn)
        require(ck == NodeKind::Time,
                "depend-on with non-time child " + std::to_string(i));
      if (ck == NodeKind::Time && !is_meta_id(a.parent))
        require(node_kind(doc, a.parent) == NodeKind::Time,
                "time expression " + std::to_string(i) +
                    " attached to an event");
      // Walk to a meta node; more steps than nodes means a cycle.
      int cur = child;
      std::size_t steps = 0;
      while (!is_meta_id(cur)) {
        require(steps++ <= attach_.size(),
                "cycle through node " + std::to_string(i));
        cur = at(cur).parent;
      }
    }
  }

  bool operator==(const TemporalTree&) const = default;

 private:
  static constexpr int kUnattached = -1000;
  std::vector<Attachment> attach_;
};

// Candidate-window property: no parent lies more than two sentences after
// its child.
inline void check_window_bound(const Document& doc, const TemporalTree& tree) {
  for (std::size_t i = 0; i < tree.size(); ++i) {
    const auto& a = tree.at(static_cast<int>(i));
    if (is_meta_id(a.parent)) continue;
    const Node& child = doc.nodes[i];
    const Node* parent = doc.node_by_id(a.parent);
    require(parent->sent_id <= child.sent_id + 2,
            "parent of node " + std::to_string(i) +
                " lies beyond the candidate window");
  }
}

}  // namespace tdp

// Copyright 2026 The hopqa Authors.
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
#pragma once

// On-disk index layout. One file per section inside the index directory:
//
//   meta      doc_count:u64 total_len:u64 avgdl:f64 k1:f64 b:f64 term_count:u64 id_space:u64
//   terms     term_count x { len:varint bytes df:varint postings_offset:u64 }
//   postings  per term, df x { doc_delta:varint tf:varint }  (first delta is the doc id)
//   doclens   id_space:varint, id_space x { len+1:varint }   (0 marks an id gap)
//   docs      id_space:varint, id_space x { len:varint bytes } (collection only)
//
// Every file is framed as
//   magic "HQIX" | version:u32 | section:u8 | payload | fnv1a64(preceding bytes):u64
// Fixed-width integers and doubles are little-endian; varints are LEB128.
// Files are written to "<name>.tmp" and renamed into place.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <string_view>
#include <vector>

#include "hopqa/error.hpp"
#include "hopqa/index.hpp"

namespace hopqa {

inline constexpr std::uint32_t kIndexFormatVersion = 1;

namespace io {

inline constexpr char kMagic[4] = {'H', 'Q', 'I', 'X'};

enum class Section : std::uint8_t { Meta = 1, Terms = 2, Postings = 3, DocLens = 4, Docs = 5 };

inline const char* section_name(Section s) {
  switch (s) {
    case Section::Meta: return "meta";
    case Section::Terms: return "terms";
    case Section::Postings: return "postings";
    case Section::DocLens: return "doclens";
    case Section::Docs: return "docs";
  }
  return "?";
}

inline std::uint64_t fnv1a64(std::string_view bytes) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

class ByteWriter {
 public:
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) { fixed(v, 4); }
  void u64(std::uint64_t v) { fixed(v, 8); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void varint(std::uint64_t v) {
    while (v >= 0x80) {
      u8(static_cast<std::uint8_t>(v | 0x80));
      v >>= 7;
    }
    u8(static_cast<std::uint8_t>(v));
  }
  void bytes(std::string_view s) { buf_.append(s); }
  void str(std::string_view s) {
    varint(s.size());
    bytes(s);
  }
  std::size_t size() const noexcept { return buf_.size(); }
  const std::string& data() const noexcept { return buf_; }

 private:
  void fixed(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  std::string buf_;
};

class ByteReader {
 public:
  ByteReader(std::string_view data, Section section) : data_(data), section_(section) {}

  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(data_[pos_++]);
  }
  std::uint32_t u32() { return static_cast<std::uint32_t>(fixed(4)); }
  std::uint64_t u64() { return fixed(8); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::uint64_t varint() {
    std::uint64_t v = 0;
    for (int shift = 0; shift < 64; shift += 7) {
      const auto b = u8();
      v |= std::uint64_t{b & 0x7Fu} << shift;
      if (!(b & 0x80)) return v;
    }
    fail("varint overflow");
  }
  std::string_view bytes(std::size_t n) {
    need(n);
    auto s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::string str() { return std::string(bytes(checked_size(varint()))); }

  std::size_t checked_size(std::uint64_t n) const {
    if (n > data_.size() - pos_) fail("truncated: length field exceeds remaining bytes");
    return static_cast<std::size_t>(n);
  }
  bool done() const noexcept { return pos_ == data_.size(); }
  std::size_t position() const noexcept { return pos_; }
  [[noreturn]] void fail(const std::string& what) const {
    throw IndexFormatError(section_name(section_), what);
  }

 private:
  void need(std::size_t n) const {
    if (data_.size() - pos_ < n) fail("truncated at byte " + std::to_string(pos_));
  }
  std::uint64_t fixed(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= std::uint64_t{static_cast<unsigned char>(data_[pos_ + i])} << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }
  std::string_view data_;
  std::size_t pos_ = 0;
  Section section_;
};

inline void write_section(const std::filesystem::path& dir, Section section, const ByteWriter& payload) {
  ByteWriter framed;
  framed.bytes(std::string_view(kMagic, 4));
  framed.u32(kIndexFormatVersion);
  framed.u8(static_cast<std::uint8_t>(section));
  framed.bytes(payload.data());
  framed.u64(fnv1a64(framed.data()));

  const auto final_path = dir / section_name(section);
  auto tmp = final_path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(tmp.string(), "cannot open for writing");
    out.write(framed.data().data(), static_cast<std::streamsize>(framed.size()));
    out.flush();
    if (!out) throw IoError(tmp.string(), "write failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, final_path, ec);
  if (ec) throw IoError(final_path.string(), "rename failed: " + ec.message());
}

/// Reads a section file, checks framing, version and checksum, and returns the payload.
inline std::string read_section(const std::filesystem::path& dir, Section section) {
  const auto path = dir / section_name(section);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path.string(), "cannot open index section");
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::string name = section_name(section);
  constexpr std::size_t kHeader = 4 + 4 + 1;
  if (data.size() < kHeader + 8) throw IndexFormatError(name, "truncated: file shorter than header");
  if (std::memcmp(data.data(), kMagic, 4) != 0) throw IndexFormatError(name, "bad magic");
  ByteReader header(std::string_view(data).substr(4, 5), section);
  const auto version = header.u32();
  if (version != kIndexFormatVersion) throw IndexVersionError(name, version, kIndexFormatVersion);
  if (header.u8() != static_cast<std::uint8_t>(section)) throw IndexFormatError(name, "section tag mismatch");
  const auto body = std::string_view(data).substr(0, data.size() - 8);
  ByteReader trailer(std::string_view(data).substr(data.size() - 8), section);
  if (trailer.u64() != fnv1a64(body)) throw IndexFormatError(name, "checksum mismatch (corrupt or truncated)");
  return std::string(body.substr(kHeader));
}

}  // namespace io

/// Writes meta, terms, postings and doclens into dir (created if missing).
inline void persist_index(const InvertedIndex& index, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError(dir.string(), "cannot create index directory: " + ec.message());

  io::ByteWriter postings;
  io::ByteWriter terms;
  const auto all = index.all_postings();
  const auto names = index.terms();
  for (std::size_t t = 0; t < names.size(); ++t) {
    terms.str(names[t]);
    terms.varint(all[t].size());
    terms.u64(postings.size());
    DocId prev = 0;
    for (const auto& p : all[t]) {
      postings.varint(p.doc - prev);
      postings.varint(p.tf);
      prev = p.doc;
    }
  }

  io::ByteWriter doclens;
  const auto lens = index.raw_doc_lengths();
  doclens.varint(lens.size());
  for (auto len : lens) doclens.varint(len == InvertedIndex::kAbsent ? 0 : std::uint64_t{len} + 1);

  io::ByteWriter meta;
  meta.u64(index.doc_count());
  meta.u64(index.total_length());
  meta.f64(index.avg_doc_len());
  meta.f64(index.params().k1);
  meta.f64(index.params().b);
  meta.u64(index.term_count());
  meta.u64(lens.size());

  io::write_section(dir, io::Section::Postings, postings);
  io::write_section(dir, io::Section::Terms, terms);
  io::write_section(dir, io::Section::DocLens, doclens);
  // meta last: a directory with a meta file has all of its sections.
  io::write_section(dir, io::Section::Meta, meta);
}

inline InvertedIndex load_index(const std::filesystem::path& dir) {
  using io::ByteReader;
  using io::Section;
  const auto meta_bytes = io::read_section(dir, Section::Meta);
  ByteReader meta(meta_bytes, Section::Meta);
  const auto doc_count = meta.u64();
  const auto total_len = meta.u64();
  const auto avgdl = meta.f64();
  InvertedIndex::Parts parts;
  parts.params.k1 = meta.f64();
  parts.params.b = meta.f64();
  const auto term_count = meta.u64();
  const auto id_space = meta.u64();
  if (!meta.done()) meta.fail("trailing bytes");

  const auto lens_bytes = io::read_section(dir, Section::DocLens);
  ByteReader lens(lens_bytes, Section::DocLens);
  if (lens.varint() != id_space) lens.fail("id space disagrees with meta");
  parts.doc_lengths.resize(lens.checked_size(id_space));
  for (auto& len : parts.doc_lengths) {
    const auto v = lens.varint();
    if (v > InvertedIndex::kAbsent) lens.fail("doc length out of range");
    len = v == 0 ? InvertedIndex::kAbsent : static_cast<std::uint32_t>(v - 1);
  }
  if (!lens.done()) lens.fail("trailing bytes");

  const auto terms_bytes = io::read_section(dir, Section::Terms);
  const auto postings_bytes = io::read_section(dir, Section::Postings);
  ByteReader terms(terms_bytes, Section::Terms);
  ByteReader postings(postings_bytes, Section::Postings);
  parts.terms.reserve(terms.checked_size(term_count));
  parts.postings.reserve(term_count);
  for (std::uint64_t t = 0; t < term_count; ++t) {
    parts.terms.push_back(terms.str());
    const auto df = terms.varint();
    if (terms.u64() != postings.position()) {
      terms.fail("postings offset mismatch for '" + parts.terms.back() + "'");
    }
    PostingList list;
    list.reserve(postings.checked_size(df));
    std::uint64_t doc = 0;
    for (std::uint64_t i = 0; i < df; ++i) {
      doc += postings.varint();
      const auto tf = postings.varint();
      if (doc >= id_space || tf > InvertedIndex::kAbsent) postings.fail("posting out of range");
      list.push_back({static_cast<DocId>(doc), static_cast<std::uint32_t>(tf)});
    }
    parts.postings.push_back(std::move(list));
  }
  if (!terms.done()) terms.fail("trailing bytes");
  if (!postings.done()) postings.fail("trailing bytes");

  auto index = InvertedIndex::from_parts(std::move(parts));
  if (index.doc_count() != doc_count || index.total_length() != total_len) {
    throw IndexFormatError("meta", "document statistics disagree with doclens");
  }
  if (std::bit_cast<std::uint64_t>(index.avg_doc_len()) != std::bit_cast<std::uint64_t>(avgdl)) {
    throw IndexFormatError("meta", "average document length disagrees with doclens");
  }
  return index;
}

/// Index sections plus the sentence store.
inline void persist_collection(const Collection& c, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError(dir.string(), "cannot create index directory: " + ec.message());
  io::ByteWriter docs;
  const auto n = c.index.id_space();
  docs.varint(n);
  for (std::size_t id = 0; id < n; ++id) {
    docs.str(c.index.contains_doc(static_cast<DocId>(id)) ? c.facts.text(static_cast<DocId>(id))
                                                          : std::string_view{});
  }
  io::write_section(dir, io::Section::Docs, docs);
  persist_index(c.index, dir);
}

inline Collection load_collection(const std::filesystem::path& dir,
                                  std::shared_ptr<const EntityExtractor> extractor = nullptr) {
  Collection c;
  if (extractor) c.extractor = std::move(extractor);
  c.index = load_index(dir);
  const auto bytes = io::read_section(dir, io::Section::Docs);
  io::ByteReader docs(bytes, io::Section::Docs);
  const auto n = docs.varint();
  if (n != c.index.id_space()) docs.fail("document count disagrees with meta");
  for (std::uint64_t id = 0; id < n; ++id) c.facts.put(static_cast<DocId>(id), docs.str());
  if (!docs.done()) docs.fail("trailing bytes");
  return c;
}

}  // namespace hopqa

// Copyright (C) 2026 The mudoc Authors. All rights reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License"); you may not use this file except in compliance
// with the License. You may obtain a copy of the License at
//
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software distributed under the License
// is distributed on an "AS IS" BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express
// or implied. See the License for the specific language governing permissions and limitations under the License.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "mudoc/error.hpp"
#include "mudoc/glyph_font.hpp"
#include "mudoc/pdf.hpp"

namespace mudoc::pdf {
namespace {

// ---------------------------------------------------------------------------------------------
// Object model

struct Object;
using Array = std::vector<Object>;
using Dict = std::map<std::string, Object, std::less<>>;

struct Ref {
    int num = 0;
    int gen = 0;
};
struct Name {
    std::string value;
};
struct Keyword {
    std::string value;
};
struct Stream {
    Dict dict;
    Bytes raw;
};

struct Object {
    std::variant<std::monostate, bool, double, std::string, Name, std::shared_ptr<Array>, std::shared_ptr<Dict>, Ref,
                 std::shared_ptr<Stream>, Keyword>
        v;

    bool is_null() const { return std::holds_alternative<std::monostate>(v); }
    bool is_number() const { return std::holds_alternative<double>(v); }
    bool is_ref() const { return std::holds_alternative<Ref>(v); }
    bool is_keyword(std::string_view k) const {
        const auto* p = std::get_if<Keyword>(&v);
        return p != nullptr && p->value == k;
    }
    const Keyword* keyword() const { return std::get_if<Keyword>(&v); }
    double number(double fallback = 0.0) const {
        const auto* p = std::get_if<double>(&v);
        return p != nullptr ? *p : fallback;
    }
    const std::string* name() const {
        const auto* p = std::get_if<Name>(&v);
        return p != nullptr ? &p->value : nullptr;
    }
    const std::string* string() const { return std::get_if<std::string>(&v); }
    const Array* array() const {
        const auto* p = std::get_if<std::shared_ptr<Array>>(&v);
        return p != nullptr ? p->get() : nullptr;
    }
    const Dict* dict() const {
        if (const auto* p = std::get_if<std::shared_ptr<Dict>>(&v)) return p->get();
        if (const auto* s = std::get_if<std::shared_ptr<Stream>>(&v)) return &(*s)->dict;
        return nullptr;
    }
    const Stream* stream() const {
        const auto* p = std::get_if<std::shared_ptr<Stream>>(&v);
        return p != nullptr ? p->get() : nullptr;
    }
    bool boolean() const {
        const auto* p = std::get_if<bool>(&v);
        return p != nullptr && *p;
    }
    Ref ref() const { return std::get<Ref>(v); }
};

const Object kNull{};

const Object& lookup(const Dict& dict, std::string_view key) {
    auto it = dict.find(key);
    return it == dict.end() ? kNull : it->second;
}

[[noreturn]] void malformed(const std::string& what) { raise(ErrorCode::kMalformedPdf, "malformed PDF: " + what); }

// ---------------------------------------------------------------------------------------------
// Lexer

bool is_ws(std::uint8_t c) { return c == 0 || c == 9 || c == 10 || c == 12 || c == 13 || c == 32; }
bool is_delim(std::uint8_t c) {
    return c == '(' || c == ')' || c == '<' || c == '>' || c == '[' || c == ']' || c == '{' || c == '}' || c == '/' ||
           c == '%';
}
bool is_regular(std::uint8_t c) { return !is_ws(c) && !is_delim(c); }

int hex_value(std::uint8_t c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

class Lexer {
 public:
    Lexer(std::span<const std::uint8_t> data, std::size_t pos = 0) : data_(data), pos_(pos) {}

    std::size_t pos() const { return pos_; }
    void seek(std::size_t pos) { pos_ = pos; }
    bool at_end() {
        skip_ws();
        return pos_ >= data_.size();
    }
    std::uint8_t peek() const { return pos_ < data_.size() ? data_[pos_] : 0; }

    void skip_ws() {
        while (pos_ < data_.size()) {
            const auto c = data_[pos_];
            if (is_ws(c)) {
                ++pos_;
            } else if (c == '%') {
                while (pos_ < data_.size() && data_[pos_] != '\n' && data_[pos_] != '\r') ++pos_;
            } else {
                break;
            }
        }
    }

    Object read(int depth = 0) {
        if (depth > 64) malformed("nesting too deep");
        skip_ws();
        if (pos_ >= data_.size()) malformed("unexpected end of data");
        const auto c = data_[pos_];
        if (c == '/') return Object{Name{read_name()}};
        if (c == '(') return Object{read_literal_string()};
        if (c == '<') {
            if (pos_ + 1 < data_.size() && data_[pos_ + 1] == '<') return read_dict(depth);
            return Object{read_hex_string()};
        }
        if (c == '[') {
            ++pos_;
            auto arr = std::make_shared<Array>();
            for (;;) {
                skip_ws();
                if (pos_ >= data_.size()) malformed("unterminated array");
                if (data_[pos_] == ']') {
                    ++pos_;
                    break;
                }
                arr->push_back(read(depth + 1));
            }
            return Object{arr};
        }
        if (c == ']' || c == '>' || c == ')' || c == '{' || c == '}') {
            ++pos_;
            return Object{Keyword{std::string(1, static_cast<char>(c))}};
        }
        if ((c >= '0' && c <= '9') || c == '+' || c == '-' || c == '.') return read_number_or_ref();
        std::size_t start = pos_;
        while (pos_ < data_.size() && is_regular(data_[pos_])) ++pos_;
        std::string word(reinterpret_cast<const char*>(&data_[start]), pos_ - start);
        if (word == "true") return Object{true};
        if (word == "false") return Object{false};
        if (word == "null") return Object{};
        return Object{Keyword{std::move(word)}};
    }

 private:
    std::string read_name() {
        ++pos_;
        std::string out;
        while (pos_ < data_.size() && is_regular(data_[pos_])) {
            if (data_[pos_] == '#' && pos_ + 2 < data_.size() && hex_value(data_[pos_ + 1]) >= 0 &&
                hex_value(data_[pos_ + 2]) >= 0) {
                out.push_back(static_cast<char>(hex_value(data_[pos_ + 1]) * 16 + hex_value(data_[pos_ + 2])));
                pos_ += 3;
            } else {
                out.push_back(static_cast<char>(data_[pos_++]));
            }
        }
        return out;
    }

    std::string read_literal_string() {
        ++pos_;
        std::string out;
        int depth = 1;
        while (pos_ < data_.size()) {
            const auto c = data_[pos_++];
            if (c == '(') {
                ++depth;
            } else if (c == ')') {
                if (--depth == 0) return out;
            } else if (c == '\\') {
                if (pos_ >= data_.size()) break;
                const auto e = data_[pos_++];
                switch (e) {
                    case 'n': out.push_back('\n'); continue;
                    case 'r': out.push_back('\r'); continue;
                    case 't': out.push_back('\t'); continue;
                    case 'b': out.push_back('\b'); continue;
                    case 'f': out.push_back('\f'); continue;
                    case '\r':
                        if (pos_ < data_.size() && data_[pos_] == '\n') ++pos_;
                        continue;
                    case '\n': continue;
                    default: break;
                }
                if (e >= '0' && e <= '7') {
                    int value = e - '0';
                    for (int i = 0; i < 2 && pos_ < data_.size() && data_[pos_] >= '0' && data_[pos_] <= '7'; ++i) {
                        value = value * 8 + (data_[pos_++] - '0');
                    }
                    out.push_back(static_cast<char>(value & 0xff));
                    continue;
                }
                out.push_back(static_cast<char>(e));
                continue;
            }
            out.push_back(static_cast<char>(c));
        }
        malformed("unterminated string");
    }

    std::string read_hex_string() {
        ++pos_;
        std::string out;
        int hi = -1;
        while (pos_ < data_.size() && data_[pos_] != '>') {
            const int v = hex_value(data_[pos_++]);
            if (v < 0) continue;
            if (hi < 0) {
                hi = v;
            } else {
                out.push_back(static_cast<char>(hi * 16 + v));
                hi = -1;
            }
        }
        if (pos_ >= data_.size()) malformed("unterminated hex string");
        ++pos_;
        if (hi >= 0) out.push_back(static_cast<char>(hi * 16));
        return out;
    }

    Object read_dict(int depth) {
        pos_ += 2;
        auto dict = std::make_shared<Dict>();
        for (;;) {
            skip_ws();
            if (pos_ >= data_.size()) malformed("unterminated dictionary");
            if (data_[pos_] == '>' && pos_ + 1 < data_.size() && data_[pos_ + 1] == '>') {
                pos_ += 2;
                break;
            }
            auto key = read(depth + 1);
            if (key.name() == nullptr) malformed("dictionary key is not a name");
            skip_ws();
            if (pos_ < data_.size() && data_[pos_] == '>') {
                // Missing value before the closing delimiter.
                (*dict)[*key.name()] = Object{};
                continue;
            }
            (*dict)[*key.name()] = read(depth + 1);
        }
        return Object{dict};
    }

    bool read_unsigned(std::size_t& at, long& value) const {
        std::size_t p = at;
        if (p >= data_.size() || data_[p] < '0' || data_[p] > '9') return false;
        value = 0;
        while (p < data_.size() && data_[p] >= '0' && data_[p] <= '9') value = value * 10 + (data_[p++] - '0');
        if (p < data_.size() && is_regular(data_[p])) return false;
        at = p;
        return true;
    }

    Object read_number_or_ref() {
        std::size_t start = pos_;
        if (data_[pos_] == '+' || data_[pos_] == '-') ++pos_;
        bool is_int = true;
        while (pos_ < data_.size() && ((data_[pos_] >= '0' && data_[pos_] <= '9') || data_[pos_] == '.')) {
            if (data_[pos_] == '.') is_int = false;
            ++pos_;
        }
        std::string text(reinterpret_cast<const char*>(&data_[start]), pos_ - start);
        double value = 0.0;
        try {
            value = text == "-" || text == "+" || text == "." ? 0.0 : std::stod(text);
        } catch (const std::exception&) {
            value = 0.0;
        }
        if (is_int && data_[start] != '+' && data_[start] != '-') {
            // Look ahead for "<gen> R".
            std::size_t p = pos_;
            while (p < data_.size() && is_ws(data_[p])) ++p;
            long gen = 0;
            if (read_unsigned(p, gen)) {
                while (p < data_.size() && is_ws(data_[p])) ++p;
                if (p < data_.size() && data_[p] == 'R' && (p + 1 >= data_.size() || !is_regular(data_[p + 1]))) {
                    pos_ = p + 1;
                    return Object{Ref{static_cast<int>(value), static_cast<int>(gen)}};
                }
            }
        }
        return Object{value};
    }

    std::span<const std::uint8_t> data_;
    std::size_t pos_;
};

// ---------------------------------------------------------------------------------------------
// Stream filters

Bytes png_unpredict(const Bytes& in, int colors, int bpc, int columns) {
    const std::size_t bpp = std::max<std::size_t>(1, static_cast<std::size_t>(colors * bpc + 7) / 8);
    const std::size_t row_len = static_cast<std::size_t>(colors * bpc * columns + 7) / 8;
    Bytes out;
    std::vector<std::uint8_t> prev(row_len, 0);
    std::size_t pos = 0;
    while (pos + 1 + row_len <= in.size()) {
        const auto type = in[pos++];
        std::vector<std::uint8_t> row(in.begin() + static_cast<std::ptrdiff_t>(pos),
                                      in.begin() + static_cast<std::ptrdiff_t>(pos + row_len));
        pos += row_len;
        for (std::size_t i = 0; i < row_len; ++i) {
            const int left = i >= bpp ? row[i - bpp] : 0;
            const int up = prev[i];
            const int up_left = i >= bpp ? prev[i - bpp] : 0;
            int add = 0;
            switch (type) {
                case 1: add = left; break;
                case 2: add = up; break;
                case 3: add = (left + up) / 2; break;
                case 4: {
                    const int p = left + up - up_left;
                    const int pa = std::abs(p - left);
                    const int pb = std::abs(p - up);
                    const int pc = std::abs(p - up_left);
                    add = (pa <= pb && pa <= pc) ? left : (pb <= pc ? up : up_left);
                    break;
                }
                default: break;
            }
            row[i] = static_cast<std::uint8_t>(row[i] + add);
        }
        out.insert(out.end(), row.begin(), row.end());
        prev = std::move(row);
    }
    return out;
}

Bytes ascii_hex_decode(const Bytes& in) {
    Bytes out;
    int hi = -1;
    for (auto c : in) {
        if (c == '>') break;
        const int v = hex_value(c);
        if (v < 0) continue;
        if (hi < 0) {
            hi = v;
        } else {
            out.push_back(static_cast<std::uint8_t>(hi * 16 + v));
            hi = -1;
        }
    }
    if (hi >= 0) out.push_back(static_cast<std::uint8_t>(hi * 16));
    return out;
}

Bytes ascii85_decode(const Bytes& in) {
    Bytes out;
    std::uint32_t tuple = 0;
    int count = 0;
    for (std::size_t i = 0; i < in.size(); ++i) {
        const auto c = in[i];
        if (c == '~') break;
        if (is_ws(c)) continue;
        if (c == 'z' && count == 0) {
            out.insert(out.end(), 4, 0);
            continue;
        }
        if (c < '!' || c > 'u') raise(ErrorCode::kDecodeError, "bad ASCII85 data");
        tuple = tuple * 85 + (c - '!');
        if (++count == 5) {
            for (int s = 3; s >= 0; --s) out.push_back(static_cast<std::uint8_t>(tuple >> (8 * s)));
            tuple = 0;
            count = 0;
        }
    }
    if (count > 1) {
        for (int k = count; k < 5; ++k) tuple = tuple * 85 + 84;
        for (int s = 3; s > 3 - (count - 1); --s) out.push_back(static_cast<std::uint8_t>(tuple >> (8 * s)));
    }
    return out;
}

Bytes run_length_decode(const Bytes& in) {
    Bytes out;
    std::size_t i = 0;
    while (i < in.size()) {
        const int len = in[i++];
        if (len == 128) break;
        if (len < 128) {
            const std::size_t n = std::min<std::size_t>(static_cast<std::size_t>(len) + 1, in.size() - i);
            out.insert(out.end(), in.begin() + static_cast<std::ptrdiff_t>(i),
                       in.begin() + static_cast<std::ptrdiff_t>(i + n));
            i += n;
        } else if (i < in.size()) {
            out.insert(out.end(), static_cast<std::size_t>(257 - len), in[i++]);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------------------------
// Geometry

struct Point {
    double x = 0.0;
    double y = 0.0;
};

struct Matrix {
    double a = 1, b = 0, c = 0, d = 1, e = 0, f = 0;

    // Row-vector convention: p' = p * M. (this * o) applies this first, then o.
    Matrix operator*(const Matrix& o) const {
        return {a * o.a + b * o.c,       a * o.b + b * o.d,       c * o.a + d * o.c,
                c * o.b + d * o.d,       e * o.a + f * o.c + o.e, e * o.b + f * o.d + o.f};
    }
    Point apply(double x, double y) const { return {x * a + y * c + e, x * b + y * d + f}; }
    static Matrix translate(double tx, double ty) { return {1, 0, 0, 1, tx, ty}; }
};

Matrix matrix_from(const Array& arr) {
    if (arr.size() < 6) return {};
    return {arr[0].number(), arr[1].number(), arr[2].number(), arr[3].number(), arr[4].number(), arr[5].number()};
}

// ---------------------------------------------------------------------------------------------
// Scanline rasterization

using Polygon = std::vector<Point>;

void fill_polygons(Raster& img, const std::vector<Polygon>& polys, bool even_odd, Rgb color) {
    double ymin = 1e300;
    double ymax = -1e300;
    for (const auto& poly : polys) {
        for (const auto& p : poly) {
            ymin = std::min(ymin, p.y);
            ymax = std::max(ymax, p.y);
        }
    }
    if (ymin > ymax) return;
    const int row0 = std::max(0, static_cast<int>(std::floor(ymin)));
    const int row1 = std::min(img.height() - 1, static_cast<int>(std::ceil(ymax)));
    struct Crossing {
        double x;
        int dir;
    };
    std::vector<Crossing> xs;
    for (int row = row0; row <= row1; ++row) {
        const double yc = row + 0.5;
        xs.clear();
        for (const auto& poly : polys) {
            const std::size_t n = poly.size();
            if (n < 2) continue;
            for (std::size_t i = 0; i < n; ++i) {
                const Point& p = poly[i];
                const Point& q = poly[(i + 1) % n];
                if (p.y == q.y) continue;
                const bool up = q.y > p.y;
                const double lo = up ? p.y : q.y;
                const double hi = up ? q.y : p.y;
                if (yc < lo || yc >= hi) continue;
                const double t = (yc - p.y) / (q.y - p.y);
                xs.push_back({p.x + t * (q.x - p.x), up ? 1 : -1});
            }
        }
        if (xs.size() < 2) continue;
        std::sort(xs.begin(), xs.end(), [](const Crossing& l, const Crossing& r) { return l.x < r.x; });
        int winding = 0;
        for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
            winding += even_odd ? 1 : xs[i].dir;
            const bool inside = even_odd ? (winding % 2) != 0 : winding != 0;
            if (!inside) continue;
            int c0 = static_cast<int>(std::ceil(xs[i].x - 0.5));
            int c1 = static_cast<int>(std::ceil(xs[i + 1].x - 0.5));
            // Keep hairline fills visible.
            if (c1 <= c0 && xs[i + 1].x > xs[i].x) c1 = c0 + 1;
            img.fill_rect({c0, row, c1, row + 1}, color);
        }
    }
}

void stroke_polyline(Raster& img, const Polygon& line, bool closed, double width_px, Rgb color) {
    const double hw = std::max(0.5, width_px / 2.0);
    const std::size_t n = line.size();
    if (n == 1) {
        fill_polygons(img, {{{line[0].x - hw, line[0].y - hw}, {line[0].x + hw, line[0].y - hw},
                             {line[0].x + hw, line[0].y + hw}, {line[0].x - hw, line[0].y + hw}}},
                      false, color);
        return;
    }
    std::vector<Polygon> quads;
    const std::size_t segs = closed ? n : n - 1;
    for (std::size_t i = 0; i < segs; ++i) {
        const Point& p = line[i];
        const Point& q = line[(i + 1) % n];
        double dx = q.x - p.x;
        double dy = q.y - p.y;
        const double len = std::hypot(dx, dy);
        if (len < 1e-9) {
            dx = 1;
            dy = 0;
        } else {
            dx /= len;
            dy /= len;
        }
        const double nx = -dy * hw;
        const double ny = dx * hw;
        // Extend along the segment by hw for square caps and joins.
        const Point a{p.x - dx * hw, p.y - dy * hw};
        const Point b{q.x + dx * hw, q.y + dy * hw};
        quads.push_back({{a.x + nx, a.y + ny}, {b.x + nx, b.y + ny}, {b.x - nx, b.y - ny}, {a.x - nx, a.y - ny}});
    }
    for (const auto& quad : quads) fill_polygons(img, {quad}, false, color);
}

// ---------------------------------------------------------------------------------------------
// Colors and images

std::uint8_t clamp_byte(double v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v * 255.0), 0L, 255L)); }

Rgb color_from_components(const std::vector<double>& comps) {
    if (comps.size() == 1) {
        const auto g = clamp_byte(comps[0]);
        return {g, g, g};
    }
    if (comps.size() == 3) return {clamp_byte(comps[0]), clamp_byte(comps[1]), clamp_byte(comps[2])};
    if (comps.size() == 4) {
        const double k = comps[3];
        return {clamp_byte((1 - comps[0]) * (1 - k)), clamp_byte((1 - comps[1]) * (1 - k)),
                clamp_byte((1 - comps[2]) * (1 - k))};
    }
    return {0, 0, 0};
}

struct DecodedImage {
    Raster rgb;
    std::vector<std::uint8_t> alpha;  // empty means opaque
};

class BitReader {
 public:
    BitReader(const Bytes& data, std::size_t row_bytes) : data_(data), row_bytes_(row_bytes) {}
    int sample(std::size_t row, std::size_t index, int bpc) const {
        const std::size_t bit = index * static_cast<std::size_t>(bpc);
        const std::size_t byte = row * row_bytes_ + bit / 8;
        if (byte >= data_.size()) return 0;
        if (bpc == 8) return data_[byte];
        if (bpc == 16) return data_[byte];
        const int shift = 8 - bpc - static_cast<int>(bit % 8);
        return (data_[byte] >> shift) & ((1 << bpc) - 1);
    }

 private:
    const Bytes& data_;
    std::size_t row_bytes_;
};

// ---------------------------------------------------------------------------------------------
// Document state shared by the parser and the painter

struct DocState {
    Bytes data;
    std::map<int, std::size_t> offsets;
    std::map<int, std::pair<int, int>> compressed;  // object -> (object stream, index)
    mutable std::recursive_mutex mutex;
    mutable std::map<int, Object> cache;
    mutable std::set<int> resolving;

    struct PageEntry {
        Dict dict;
        std::array<double, 4> media_box{0, 0, 612, 792};
        Object resources;
    };
    std::vector<PageEntry> pages;

    Object resolve(const Object& obj) const {
        const Object* cur = &obj;
        Object holder;
        for (int hops = 0; hops < 32 && cur->is_ref(); ++hops) {
            holder = get(cur->ref().num);
            cur = &holder;
        }
        return *cur;
    }

    Object get(int num) const {
        std::lock_guard lock(mutex);
        if (auto it = cache.find(num); it != cache.end()) return it->second;
        if (resolving.contains(num)) return Object{};
        resolving.insert(num);
        Object obj;
        try {
            if (auto it = offsets.find(num); it != offsets.end()) {
                obj = parse_at(it->second);
            } else if (auto ct = compressed.find(num); ct != compressed.end()) {
                obj = from_object_stream(ct->second.first, ct->second.second);
            }
        } catch (...) {
            resolving.erase(num);
            throw;
        }
        resolving.erase(num);
        cache[num] = obj;
        return obj;
    }

    Object parse_at(std::size_t offset) const {
        Lexer lex(data, offset);
        lex.read();  // object number
        lex.read();  // generation
        if (!lex.read().is_keyword("obj")) malformed("missing obj keyword");
        Object value = lex.read();
        const std::size_t after_value = lex.pos();
        lex.skip_ws();
        const std::size_t kw_at = lex.pos();
        if (value.dict() != nullptr && kw_at + 6 <= data.size() && std::memcmp(&data[kw_at], "stream", 6) == 0) {
            std::size_t start = kw_at + 6;
            if (start < data.size() && data[start] == '\r') ++start;
            if (start < data.size() && data[start] == '\n') ++start;
            const auto length_obj = resolve(lookup(*value.dict(), "Length"));
            std::size_t length = length_obj.is_number() ? static_cast<std::size_t>(std::max(0.0, length_obj.number()))
                                                        : std::size_t{0};
            if (!length_obj.is_number() || !ends_stream_at(start + length)) {
                length = find_endstream(start) - start;
            }
            auto stream = std::make_shared<Stream>();
            stream->dict = *value.dict();
            stream->raw.assign(data.begin() + static_cast<std::ptrdiff_t>(start),
                               data.begin() + static_cast<std::ptrdiff_t>(start + length));
            return Object{stream};
        }
        (void)after_value;
        return value;
    }

    bool ends_stream_at(std::size_t pos) const {
        if (pos > data.size()) return false;
        while (pos < data.size() && is_ws(data[pos])) ++pos;
        return pos + 9 <= data.size() && std::memcmp(&data[pos], "endstream", 9) == 0;
    }

    std::size_t find_endstream(std::size_t start) const {
        static constexpr std::string_view kEnd = "endstream";
        auto it = std::search(data.begin() + static_cast<std::ptrdiff_t>(start), data.end(), kEnd.begin(), kEnd.end());
        if (it == data.end()) malformed("unterminated stream");
        std::size_t end = static_cast<std::size_t>(it - data.begin());
        if (end > start && data[end - 1] == '\n') --end;
        if (end > start && data[end - 1] == '\r') --end;
        return end;
    }

    Object from_object_stream(int stream_num, int index) const {
        const auto container = get(stream_num);
        const auto* st = container.stream();
        if (st == nullptr) return Object{};
        const auto body = decode_stream(*st);
        const int n = static_cast<int>(lookup(st->dict, "N").number());
        const auto first = static_cast<std::size_t>(lookup(st->dict, "First").number());
        Lexer header(body);
        std::size_t offset = 0;
        for (int i = 0; i < n; ++i) {
            header.read();
            const auto off = header.read();
            if (i == index) {
                offset = static_cast<std::size_t>(off.number());
                break;
            }
        }
        Lexer lex(body, first + offset);
        return lex.read();
    }

    Bytes decode_stream(const Stream& st, bool* unsupported = nullptr) const {
        Bytes bytes = st.raw;
        const auto filter = resolve(lookup(st.dict, "Filter"));
        const auto parms = resolve(lookup(st.dict, "DecodeParms"));
        std::vector<std::string> filters;
        std::vector<Object> params;
        if (const auto* n = filter.name()) {
            filters.push_back(*n);
            params.push_back(parms);
        } else if (const auto* arr = filter.array()) {
            for (std::size_t i = 0; i < arr->size(); ++i) {
                const auto f = resolve((*arr)[i]);
                if (const auto* n2 = f.name()) filters.push_back(*n2);
                const auto* parr = parms.array();
                params.push_back(parr != nullptr && i < parr->size() ? resolve((*parr)[i]) : Object{});
            }
        }
        for (std::size_t i = 0; i < filters.size(); ++i) {
            const auto& f = filters[i];
            if (f == "FlateDecode" || f == "Fl") {
                bytes = inflate(bytes);
                if (const auto* p = params[i].dict()) {
                    const int predictor = static_cast<int>(lookup(*p, "Predictor").number(1));
                    if (predictor >= 10) {
                        bytes = png_unpredict(bytes, static_cast<int>(lookup(*p, "Colors").number(1)),
                                              static_cast<int>(lookup(*p, "BitsPerComponent").number(8)),
                                              static_cast<int>(lookup(*p, "Columns").number(1)));
                    }
                }
            } else if (f == "ASCIIHexDecode" || f == "AHx") {
                bytes = ascii_hex_decode(bytes);
            } else if (f == "ASCII85Decode" || f == "A85") {
                bytes = ascii85_decode(bytes);
            } else if (f == "RunLengthDecode" || f == "RL") {
                bytes = run_length_decode(bytes);
            } else {
                if (unsupported != nullptr) *unsupported = true;
                return {};
            }
        }
        return bytes;
    }

    // -- structure ---------------------------------------------------------------------------

    void scan_objects() {
        static constexpr std::string_view kObj = "obj";
        auto it = data.begin();
        while ((it = std::search(it, data.end(), kObj.begin(), kObj.end())) != data.end()) {
            const std::size_t at = static_cast<std::size_t>(it - data.begin());
            ++it;
            if (at + 3 < data.size() && is_regular(data[at + 3])) continue;
            if (at == 0 || !is_ws(data[at - 1])) continue;
            // Walk back over "<num> <gen> ".
            std::size_t p = at;
            while (p > 0 && is_ws(data[p - 1])) --p;
            std::size_t gen_end = p;
            while (p > 0 && data[p - 1] >= '0' && data[p - 1] <= '9') --p;
            if (p == gen_end) continue;
            std::size_t q = p;
            while (q > 0 && is_ws(data[q - 1])) --q;
            if (q == p) continue;
            std::size_t num_end = q;
            while (q > 0 && data[q - 1] >= '0' && data[q - 1] <= '9') --q;
            if (q == num_end) continue;
            if (q > 0 && is_regular(data[q - 1])) continue;
            const int num = std::stoi(std::string(reinterpret_cast<const char*>(&data[q]), num_end - q));
            offsets[num] = q;  // later definitions win, as with incremental updates
        }
        // Register objects packed into object streams.
        for (const auto& [num, off] : offsets) {
            Object obj;
            try {
                obj = get(num);
            } catch (const Error&) {
                continue;
            }
            const auto* st = obj.stream();
            if (st == nullptr) continue;
            const auto* type = lookup(st->dict, "Type").name();
            if (type == nullptr || *type != "ObjStm") continue;
            Bytes body;
            try {
                body = decode_stream(*st);
            } catch (const Error&) {
                continue;
            }
            const int n = static_cast<int>(lookup(st->dict, "N").number());
            Lexer header(body);
            for (int i = 0; i < n; ++i) {
                try {
                    const auto inner = header.read();
                    header.read();
                    const int inner_num = static_cast<int>(inner.number(-1));
                    if (inner_num >= 0 && !offsets.contains(inner_num)) compressed[inner_num] = {num, i};
                } catch (const Error&) {
                    break;
                }
            }
        }
    }

    Object find_root() const {
        static constexpr std::string_view kTrailer = "trailer";
        std::optional<Object> root;
        auto it = data.begin();
        while ((it = std::search(it, data.end(), kTrailer.begin(), kTrailer.end())) != data.end()) {
            const std::size_t at = static_cast<std::size_t>(it - data.begin()) + kTrailer.size();
            ++it;
            try {
                Lexer lex(data, at);
                const auto dict = lex.read();
                if (const auto* d = dict.dict()) {
                    if (!lookup(*d, "Encrypt").is_null()) raise(ErrorCode::kMalformedPdf, "encrypted PDFs are not supported");
                    if (!lookup(*d, "Root").is_null()) root = lookup(*d, "Root");
                }
            } catch (const Error& e) {
                if (std::string_view(e.what()).find("encrypted") != std::string_view::npos) throw;
            }
        }
        if (root) return resolve(*root);
        // Cross-reference streams carry the trailer keys; fall back to any catalog.
        for (const auto& [num, off] : offsets) {
            Object obj;
            try {
                obj = get(num);
            } catch (const Error&) {
                continue;
            }
            const auto* d = obj.dict();
            if (d == nullptr) continue;
            const auto* type = lookup(*d, "Type").name();
            if (type != nullptr && *type == "XRef") {
                if (!lookup(*d, "Encrypt").is_null()) raise(ErrorCode::kMalformedPdf, "encrypted PDFs are not supported");
                if (!lookup(*d, "Root").is_null()) return resolve(lookup(*d, "Root"));
            }
        }
        for (const auto& [num, off] : offsets) {
            Object obj;
            try {
                obj = get(num);
            } catch (const Error&) {
                continue;
            }
            const auto* d = obj.dict();
            const auto* type = d != nullptr ? lookup(*d, "Type").name() : nullptr;
            if (type != nullptr && *type == "Catalog") return obj;
        }
        malformed("no document catalog");
    }

    void collect_pages(const Object& node_ref, std::array<double, 4> media_box, Object resources,
                       std::set<int>& seen, int depth) {
        if (depth > 64) malformed("page tree too deep");
        if (node_ref.is_ref()) {
            if (seen.contains(node_ref.ref().num)) return;
            seen.insert(node_ref.ref().num);
        }
        const auto node = resolve(node_ref);
        const auto* dict = node.dict();
        if (dict == nullptr) return;
        if (const auto* mb = resolve(lookup(*dict, "MediaBox")).array(); mb != nullptr && mb->size() == 4) {
            for (int i = 0; i < 4; ++i) media_box[i] = resolve((*mb)[i]).number();
        }
        if (!lookup(*dict, "Resources").is_null()) resources = lookup(*dict, "Resources");
        const auto kids = resolve(lookup(*dict, "Kids"));
        const auto* type = lookup(*dict, "Type").name();
        const bool is_tree = (type != nullptr && *type == "Pages") || (type == nullptr && kids.array() != nullptr);
        if (is_tree) {
            if (const auto* arr = kids.array()) {
                for (const auto& kid : *arr) collect_pages(kid, media_box, resources, seen, depth + 1);
            }
            return;
        }
        PageEntry entry;
        entry.dict = *dict;
        entry.media_box = {std::min(media_box[0], media_box[2]), std::min(media_box[1], media_box[3]),
                           std::max(media_box[0], media_box[2]), std::max(media_box[1], media_box[3])};
        entry.resources = resources;
        pages.push_back(std::move(entry));
    }

    // -- images ------------------------------------------------------------------------------

    DecodedImage decode_image(const Stream& st, Rgb fill) const {
        const auto& d = st.dict;
        const int w = static_cast<int>(resolve(lookup(d, "Width")).number());
        const int h = static_cast<int>(resolve(lookup(d, "Height")).number());
        if (w <= 0 || h <= 0) return {};
        bool unsupported = false;
        Bytes bytes;
        try {
            bytes = decode_stream(st, &unsupported);
        } catch (const Error&) {
            unsupported = true;
        }
        const auto placeholder = [&] {
            const int pw = std::min(w, 64);
            const int ph = std::min(h, 64);
            return DecodedImage{Raster(pw, ph, 72.0, Rgb{160, 160, 160}), {}};
        };
        if (unsupported || static_cast<double>(w) * h > 64e6) return placeholder();

        const bool is_mask = resolve(lookup(d, "ImageMask")).boolean();
        if (is_mask) {
            bool invert = false;
            if (const auto* dec = resolve(lookup(d, "Decode")).array(); dec != nullptr && dec->size() >= 2) {
                invert = (*dec)[0].number() > (*dec)[1].number();
            }
            BitReader bits(bytes, static_cast<std::size_t>(w + 7) / 8);
            DecodedImage out{Raster(w, h, 72.0, fill), std::vector<std::uint8_t>(static_cast<std::size_t>(w) * h)};
            for (int y = 0; y < h; ++y) {
                for (int x = 0; x < w; ++x) {
                    const bool paint = (bits.sample(y, x, 1) == 0) != invert;
                    out.alpha[static_cast<std::size_t>(y) * w + x] = paint ? 255 : 0;
                }
            }
            return out;
        }

        int bpc = static_cast<int>(resolve(lookup(d, "BitsPerComponent")).number(8));
        if (bpc != 1 && bpc != 2 && bpc != 4 && bpc != 8 && bpc != 16) return placeholder();
        int components = 3;
        std::string base = "DeviceRGB";
        std::vector<Rgb> palette;
        bool separation = false;
        auto cs = resolve(lookup(d, "ColorSpace"));
        auto classify = [&](const Object& space, auto& self, int depth) -> void {
            if (depth > 4) return;
            if (const auto* n = space.name()) {
                base = *n;
                if (*n == "DeviceGray" || *n == "G" || *n == "CalGray") components = 1;
                else if (*n == "DeviceCMYK" || *n == "CMYK") components = 4;
                else components = 3;
                return;
            }
            const auto* arr = space.array();
            if (arr == nullptr || arr->empty()) return;
            const auto* family = (*arr)[0].name();
            if (family == nullptr) return;
            if (*family == "ICCBased" && arr->size() > 1) {
                const auto profile = resolve((*arr)[1]);
                const auto* pd = profile.dict();
                components = pd != nullptr ? static_cast<int>(lookup(*pd, "N").number(3)) : 3;
                base = components == 1 ? "DeviceGray" : (components == 4 ? "DeviceCMYK" : "DeviceRGB");
            } else if ((*family == "Indexed" || *family == "I") && arr->size() >= 4) {
                int base_components = 3;
                auto base_space = resolve((*arr)[1]);
                std::string saved_base = base;
                self(base_space, self, depth + 1);
                base_components = components;
                const int hival = static_cast<int>(resolve((*arr)[2]).number());
                const auto lut_obj = resolve((*arr)[3]);
                Bytes lut;
                if (const auto* s = lut_obj.string()) lut.assign(s->begin(), s->end());
                else if (const auto* ls = lut_obj.stream()) lut = decode_stream(*ls);
                for (int i = 0; i <= hival; ++i) {
                    std::vector<double> comps;
                    for (int c = 0; c < base_components; ++c) {
                        const std::size_t at = static_cast<std::size_t>(i * base_components + c);
                        comps.push_back(at < lut.size() ? lut[at] / 255.0 : 0.0);
                    }
                    palette.push_back(color_from_components(comps));
                }
                components = 1;
            } else if (*family == "Separation" || *family == "DeviceN") {
                components = 1;
                separation = true;
            } else if (*family == "CalRGB" || *family == "Lab") {
                components = 3;
            } else if (*family == "CalGray") {
                components = 1;
            }
        };
        classify(cs, classify, 0);

        const std::size_t row_bytes = (static_cast<std::size_t>(w) * components * bpc + 7) / 8;
        BitReader bits(bytes, row_bytes);
        const double max_sample = bpc == 16 ? 255.0 : static_cast<double>((1 << bpc) - 1);
        DecodedImage out{Raster(w, h), {}};
        std::vector<double> comps(static_cast<std::size_t>(components));
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                if (!palette.empty()) {
                    const int idx = bits.sample(y, x, bpc);
                    out.rgb.set(x, y, idx < static_cast<int>(palette.size()) ? palette[idx] : Rgb{0, 0, 0});
                    continue;
                }
                for (int c = 0; c < components; ++c) {
                    comps[c] = bits.sample(y, static_cast<std::size_t>(x) * components + c, bpc) / max_sample;
                }
                if (separation) comps[0] = 1.0 - comps[0];
                out.rgb.set(x, y, color_from_components(comps));
            }
        }
        return out;
    }
};

// ---------------------------------------------------------------------------------------------
// Content interpretation

struct TextState {
    const Dict* font = nullptr;
    double size = 12.0;
    double char_spacing = 0.0;
    double word_spacing = 0.0;
    double h_scale = 1.0;
    double leading = 0.0;
    double rise = 0.0;
    int render_mode = 0;
};

struct GState {
    Matrix ctm;
    Rgb fill{0, 0, 0};
    Rgb stroke{0, 0, 0};
    double line_width = 1.0;
    TextState text;
};

class Painter {
 public:
    Painter(const DocState& doc, Raster& target, const Matrix& device) : doc_(doc), img_(target), device_(device) {}

    void run(const Bytes& content, const Object& resources, int depth) {
        if (depth > 16) return;
        const auto res = doc_.resolve(resources);
        const Dict* res_dict = res.dict();
        Lexer lex(content);
        std::vector<Object> operands;
        while (!lex.at_end()) {
            Object obj;
            try {
                obj = lex.read();
            } catch (const Error&) {
                break;  // damaged content: keep what was drawn so far
            }
            const auto* kw = obj.keyword();
            if (kw == nullptr) {
                operands.push_back(std::move(obj));
                if (operands.size() > 4096) operands.clear();
                continue;
            }
            if (kw->value == "BI") {
                skip_inline_image(lex);
                operands.clear();
                continue;
            }
            execute(kw->value, operands, res_dict, depth);
            operands.clear();
        }
    }

 private:
    double num(const std::vector<Object>& ops, std::size_t i) const {
        return i < ops.size() ? ops[i].number() : 0.0;
    }

    Matrix to_device() const { return gs_.ctm * device_; }

    void skip_inline_image(Lexer& lex) {
        // Dictionary pairs up to ID, then binary data up to a delimited EI.
        for (int guard = 0; guard < 256; ++guard) {
            if (lex.at_end()) return;
            auto o = lex.read();
            if (o.is_keyword("ID")) break;
        }
        lex.seek(lex.pos() + 1);
        for (;;) {
            if (lex.at_end()) return;
            const std::size_t here = lex.pos();
            Object o;
            try {
                o = lex.read();
            } catch (const Error&) {
                lex.seek(here + 1);
                continue;
            }
            if (o.is_keyword("EI")) return;
        }
    }

    void execute(const std::string& op, const std::vector<Object>& ops, const Dict* res, int depth) {
        if (op == "q") {
            stack_.push_back(gs_);
        } else if (op == "Q") {
            if (!stack_.empty()) {
                gs_ = stack_.back();
                stack_.pop_back();
            }
        } else if (op == "cm") {
            gs_.ctm = Matrix{num(ops, 0), num(ops, 1), num(ops, 2), num(ops, 3), num(ops, 4), num(ops, 5)} * gs_.ctm;
        } else if (op == "w") {
            gs_.line_width = num(ops, 0);
        } else if (op == "g" || op == "rg" || op == "k" || op == "sc" || op == "scn") {
            set_color(ops, gs_.fill);
        } else if (op == "G" || op == "RG" || op == "K" || op == "SC" || op == "SCN") {
            set_color(ops, gs_.stroke);
        } else if (op == "cs") {
            gs_.fill = {0, 0, 0};
        } else if (op == "CS") {
            gs_.stroke = {0, 0, 0};
        } else if (op == "m") {
            flush_subpath();
            current_.push_back(to_device().apply(num(ops, 0), num(ops, 1)));
            last_user_ = {num(ops, 0), num(ops, 1)};
        } else if (op == "l") {
            current_.push_back(to_device().apply(num(ops, 0), num(ops, 1)));
            last_user_ = {num(ops, 0), num(ops, 1)};
        } else if (op == "c" || op == "v" || op == "y") {
            Point p1, p2, p3;
            if (op == "c") {
                p1 = {num(ops, 0), num(ops, 1)};
                p2 = {num(ops, 2), num(ops, 3)};
                p3 = {num(ops, 4), num(ops, 5)};
            } else if (op == "v") {
                p1 = last_user_;
                p2 = {num(ops, 0), num(ops, 1)};
                p3 = {num(ops, 2), num(ops, 3)};
            } else {
                p1 = {num(ops, 0), num(ops, 1)};
                p2 = {num(ops, 2), num(ops, 3)};
                p3 = p2;
            }
            const Point p0 = last_user_;
            const auto m = to_device();
            for (int i = 1; i <= 16; ++i) {
                const double t = i / 16.0;
                const double u = 1 - t;
                const double x = u * u * u * p0.x + 3 * u * u * t * p1.x + 3 * u * t * t * p2.x + t * t * t * p3.x;
                const double y = u * u * u * p0.y + 3 * u * u * t * p1.y + 3 * u * t * t * p2.y + t * t * t * p3.y;
                current_.push_back(m.apply(x, y));
            }
            last_user_ = p3;
        } else if (op == "h") {
            if (!current_.empty()) closed_.back() = true;
        } else if (op == "re") {
            flush_subpath();
            const double x = num(ops, 0), y = num(ops, 1), w = num(ops, 2), h = num(ops, 3);
            const auto m = to_device();
            current_ = {m.apply(x, y), m.apply(x + w, y), m.apply(x + w, y + h), m.apply(x, y + h)};
            closed_.back() = true;
            flush_subpath();
            last_user_ = {x, y};
        } else if (op == "f" || op == "F" || op == "f*") {
            paint(true, false, op == "f*");
        } else if (op == "S") {
            paint(false, true, false);
        } else if (op == "s") {
            if (!current_.empty()) closed_.back() = true;
            paint(false, true, false);
        } else if (op == "B" || op == "B*") {
            paint(true, true, op == "B*");
        } else if (op == "b" || op == "b*") {
            if (!current_.empty()) closed_.back() = true;
            paint(true, true, op == "b*");
        } else if (op == "n") {
            reset_path();
        } else if (op == "BT") {
            text_matrix_ = {};
            line_matrix_ = {};
        } else if (op == "Tf") {
            gs_.text.size = num(ops, 1);
            gs_.text.font = nullptr;
            if (res != nullptr && !ops.empty() && ops[0].name() != nullptr) {
                const auto fonts = doc_.resolve(lookup(*res, "Font"));
                if (const auto* fd = fonts.dict()) {
                    font_holder_ = doc_.resolve(lookup(*fd, *ops[0].name()));
                    font_cache_.push_back(font_holder_);
                    gs_.text.font = font_cache_.back().dict();
                }
            }
        } else if (op == "Tc") {
            gs_.text.char_spacing = num(ops, 0);
        } else if (op == "Tw") {
            gs_.text.word_spacing = num(ops, 0);
        } else if (op == "Tz") {
            gs_.text.h_scale = num(ops, 0) / 100.0;
        } else if (op == "TL") {
            gs_.text.leading = num(ops, 0);
        } else if (op == "Ts") {
            gs_.text.rise = num(ops, 0);
        } else if (op == "Tr") {
            gs_.text.render_mode = static_cast<int>(num(ops, 0));
        } else if (op == "Td" || op == "TD") {
            if (op == "TD") gs_.text.leading = -num(ops, 1);
            line_matrix_ = Matrix::translate(num(ops, 0), num(ops, 1)) * line_matrix_;
            text_matrix_ = line_matrix_;
        } else if (op == "Tm") {
            line_matrix_ = {num(ops, 0), num(ops, 1), num(ops, 2), num(ops, 3), num(ops, 4), num(ops, 5)};
            text_matrix_ = line_matrix_;
        } else if (op == "T*") {
            next_line();
        } else if (op == "Tj") {
            if (!ops.empty() && ops[0].string() != nullptr) show(*ops[0].string());
        } else if (op == "'") {
            next_line();
            if (!ops.empty() && ops[0].string() != nullptr) show(*ops[0].string());
        } else if (op == "\"") {
            gs_.text.word_spacing = num(ops, 0);
            gs_.text.char_spacing = num(ops, 1);
            next_line();
            if (ops.size() > 2 && ops[2].string() != nullptr) show(*ops[2].string());
        } else if (op == "TJ") {
            if (ops.empty() || ops[0].array() == nullptr) return;
            for (const auto& item : *ops[0].array()) {
                if (const auto* s = item.string()) {
                    show(*s);
                } else if (item.is_number()) {
                    const double tx = -item.number() / 1000.0 * gs_.text.size * gs_.text.h_scale;
                    text_matrix_ = Matrix::translate(tx, 0) * text_matrix_;
                }
            }
        } else if (op == "Do") {
            if (res == nullptr || ops.empty() || ops[0].name() == nullptr) return;
            const auto xobjects = doc_.resolve(lookup(*res, "XObject"));
            const auto* xd = xobjects.dict();
            if (xd == nullptr) return;
            const auto xobj = doc_.resolve(lookup(*xd, *ops[0].name()));
            const auto* st = xobj.stream();
            if (st == nullptr) return;
            const auto* subtype = lookup(st->dict, "Subtype").name();
            if (subtype == nullptr) return;
            if (*subtype == "Image") {
                draw_image(*st);
            } else if (*subtype == "Form") {
                draw_form(*st, res, depth);
            }
        }
    }

    void set_color(const std::vector<Object>& ops, Rgb& target) {
        std::vector<double> comps;
        for (const auto& o : ops) {
            if (o.is_number()) comps.push_back(o.number());
        }
        if (comps.size() == 1 || comps.size() == 3 || comps.size() == 4) target = color_from_components(comps);
    }

    void next_line() {
        line_matrix_ = Matrix::translate(0, -gs_.text.leading) * line_matrix_;
        text_matrix_ = line_matrix_;
    }

    double glyph_width(int code) const {
        const Dict* font = gs_.text.font;
        if (font == nullptr) return glyphs::kAdvance;
        const auto widths = doc_.resolve(lookup(*font, "Widths"));
        if (const auto* arr = widths.array()) {
            const int first = static_cast<int>(doc_.resolve(lookup(*font, "FirstChar")).number());
            const int idx = code - first;
            if (idx >= 0 && idx < static_cast<int>(arr->size())) return doc_.resolve((*arr)[idx]).number() / 1000.0;
        }
        const auto* subtype = lookup(*font, "Subtype").name();
        if (subtype != nullptr && *subtype == "Type0") return 1.0;
        return glyphs::kAdvance;
    }

    void show(const std::string& bytes) {
        const Dict* font = gs_.text.font;
        const auto* subtype = font != nullptr ? lookup(*font, "Subtype").name() : nullptr;
        const bool two_byte = subtype != nullptr && *subtype == "Type0";
        const auto& ts = gs_.text;
        const bool visible = ts.render_mode != 3 && ts.render_mode != 7;
        for (std::size_t i = 0; i < bytes.size(); i += two_byte ? 2 : 1) {
            int code = static_cast<unsigned char>(bytes[i]);
            if (two_byte && i + 1 < bytes.size()) code = code * 256 + static_cast<unsigned char>(bytes[i + 1]);
            const Matrix render = Matrix{ts.size * ts.h_scale, 0, 0, ts.size, 0, ts.rise} * text_matrix_ * gs_.ctm *
                                  device_;
            if (visible) {
                const Point origin = render.apply(0, 0);
                const double pixel_size = std::hypot(render.c, render.d);
                const int scale = glyphs::scale_for_pixel_size(pixel_size);
                const char glyph = (!two_byte && code >= 32 && code <= 126) ? static_cast<char>(code) : '?';
                if (glyph != ' ') {
                    glyphs::draw_text(img_, static_cast<int>(std::lround(origin.x)),
                                      static_cast<int>(std::lround(origin.y)), std::string_view(&glyph, 1), scale,
                                      gs_.fill);
                }
            }
            double tx = glyph_width(code) * ts.size + ts.char_spacing;
            if (!two_byte && code == 32) tx += ts.word_spacing;
            text_matrix_ = Matrix::translate(tx * ts.h_scale, 0) * text_matrix_;
        }
    }

    void draw_image(const Stream& st) {
        const auto decoded = doc_.decode_image(st, gs_.fill);
        const Raster& src = decoded.rgb;
        if (src.empty()) return;
        const Matrix m = to_device();
        const double det = m.a * m.d - m.b * m.c;
        if (std::abs(det) < 1e-12) return;
        const Point corners[4] = {m.apply(0, 0), m.apply(1, 0), m.apply(0, 1), m.apply(1, 1)};
        double x0 = 1e300, y0 = 1e300, x1 = -1e300, y1 = -1e300;
        for (const auto& p : corners) {
            x0 = std::min(x0, p.x);
            y0 = std::min(y0, p.y);
            x1 = std::max(x1, p.x);
            y1 = std::max(y1, p.y);
        }
        const int px0 = std::max(0, static_cast<int>(std::floor(x0)));
        const int py0 = std::max(0, static_cast<int>(std::floor(y0)));
        const int px1 = std::min(img_.width(), static_cast<int>(std::ceil(x1)));
        const int py1 = std::min(img_.height(), static_cast<int>(std::ceil(y1)));
        // Inverse of the linear part maps device pixel centers back to the unit square.
        const double ia = m.d / det, ib = -m.b / det, ic = -m.c / det, id = m.a / det;
        for (int y = py0; y < py1; ++y) {
            for (int x = px0; x < px1; ++x) {
                const double dx = x + 0.5 - m.e;
                const double dy = y + 0.5 - m.f;
                const double u = dx * ia + dy * ic;
                const double v = dx * ib + dy * id;
                if (u < 0 || u >= 1 || v < 0 || v >= 1) continue;
                const int sx = std::min(src.width() - 1, static_cast<int>(u * src.width()));
                const int sy = std::min(src.height() - 1, static_cast<int>((1 - v) * src.height()));
                if (!decoded.alpha.empty() && decoded.alpha[static_cast<std::size_t>(sy) * src.width() + sx] == 0) {
                    continue;
                }
                img_.set(x, y, src.at(sx, sy));
            }
        }
    }

    void draw_form(const Stream& st, const Dict* parent_res, int depth) {
        bool unsupported = false;
        Bytes body;
        try {
            body = doc_.decode_stream(st, &unsupported);
        } catch (const Error&) {
            return;
        }
        if (unsupported) return;
        const GState saved = gs_;
        const auto saved_stack_size = stack_.size();
        if (const auto* arr = doc_.resolve(lookup(st.dict, "Matrix")).array()) gs_.ctm = matrix_from(*arr) * gs_.ctm;
        auto res = lookup(st.dict, "Resources");
        if (res.is_null() && parent_res != nullptr) res = Object{std::make_shared<Dict>(*parent_res)};
        const auto saved_text = text_matrix_;
        const auto saved_line = line_matrix_;
        run(body, res, depth + 1);
        gs_ = saved;
        stack_.resize(std::min(stack_.size(), saved_stack_size));
        text_matrix_ = saved_text;
        line_matrix_ = saved_line;
    }

    void flush_subpath() {
        if (!current_.empty()) {
            subpaths_.push_back(std::move(current_));
            current_.clear();
        }
        closed_.push_back(false);
    }

    void reset_path() {
        current_.clear();
        subpaths_.clear();
        closed_.clear();
        closed_.push_back(false);
    }

    void paint(bool fill, bool stroke, bool even_odd) {
        const bool last_closed = closed_.empty() ? false : closed_.back();
        if (!current_.empty()) {
            subpaths_.push_back(std::move(current_));
            current_.clear();
            closed_.push_back(last_closed);
        }
        if (fill) fill_polygons(img_, subpaths_, even_odd, gs_.fill);
        if (stroke) {
            const double scale = std::sqrt(std::abs(to_device().a * to_device().d - to_device().b * to_device().c));
            const double width = std::max(1.0, gs_.line_width * scale);
            // closed_ holds a leading placeholder per flush; align from the back.
            for (std::size_t i = 0; i < subpaths_.size(); ++i) {
                const std::size_t ci = closed_.size() - subpaths_.size() + i;
                const bool closed = ci < closed_.size() && closed_[ci];
                stroke_polyline(img_, subpaths_[i], closed, width, gs_.stroke);
            }
        }
        reset_path();
    }

    const DocState& doc_;
    Raster& img_;
    Matrix device_;
    GState gs_;
    std::vector<GState> stack_;
    Matrix text_matrix_;
    Matrix line_matrix_;
    Point last_user_;
    Polygon current_;
    std::vector<Polygon> subpaths_;
    std::vector<bool> closed_{false};
    Object font_holder_;
    std::vector<Object> font_cache_;
};

}  // namespace

struct Document::Impl : DocState {};

Document::Document(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {}
Document::Document(Document&&) noexcept = default;
Document& Document::operator=(Document&&) noexcept = default;
Document::~Document() = default;

Document Document::parse(Bytes data) {
    static constexpr std::string_view kMagic = "%PDF-";
    if (data.size() < 8) malformed("file too short");
    const auto head_end = data.begin() + static_cast<std::ptrdiff_t>(std::min<std::size_t>(data.size(), 1024));
    if (std::search(data.begin(), head_end, kMagic.begin(), kMagic.end()) == head_end) malformed("missing %PDF header");

    auto impl = std::make_unique<Impl>();
    impl->data = std::move(data);
    impl->scan_objects();
    if (impl->offsets.empty()) malformed("no objects found");
    const auto root = impl->find_root();
    const auto* catalog = root.dict();
    if (catalog == nullptr) malformed("catalog is not a dictionary");
    std::set<int> seen;
    impl->collect_pages(lookup(*catalog, "Pages"), {0, 0, 612, 792}, Object{}, seen, 0);
    if (impl->pages.empty()) malformed("document has no pages");
    return Document(std::move(impl));
}

std::size_t Document::page_count() const noexcept { return impl_->pages.size(); }

PageSize Document::page_size(std::size_t page_index) const {
    if (page_index >= impl_->pages.size()) raise(ErrorCode::kInvalidArgument, "page index out of range");
    const auto& mb = impl_->pages[page_index].media_box;
    return {mb[2] - mb[0], mb[3] - mb[1]};
}

Raster Document::render_page(std::size_t page_index, double dpi) const {
    if (page_index >= impl_->pages.size()) raise(ErrorCode::kInvalidArgument, "page index out of range");
    if (!(dpi > 0.0) || dpi > 1200.0) raise(ErrorCode::kInvalidArgument, "dpi out of range");
    const auto& page = impl_->pages[page_index];
    const auto size = page_size(page_index);
    const double k = dpi / 72.0;
    const long w = std::lround(size.width * k);
    const long h = std::lround(size.height * k);
    if (w <= 0 || h <= 0 || w > 30000 || h > 30000) malformed("unreasonable page size");
    Raster img(static_cast<int>(w), static_cast<int>(h), dpi);
    const Matrix device{k, 0, 0, -k, -page.media_box[0] * k, page.media_box[3] * k};

    Bytes content;
    const auto contents = impl_->resolve(lookup(page.dict, "Contents"));
    auto append = [&](const Object& obj) {
        const auto resolved = impl_->resolve(obj);
        if (const auto* st = resolved.stream()) {
            bool unsupported = false;
            try {
                auto body = impl_->decode_stream(*st, &unsupported);
                content.insert(content.end(), body.begin(), body.end());
                content.push_back('\n');
            } catch (const Error&) {
                // A damaged content stream leaves the page partially drawn.
            }
        }
    };
    if (const auto* arr = contents.array()) {
        for (const auto& part : *arr) append(part);
    } else {
        append(contents);
    }
    Painter painter(*impl_, img, device);
    painter.run(content, page.resources, 0);
    return img;
}

}  // namespace mudoc::pdf

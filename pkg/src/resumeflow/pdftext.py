"""Minimal PDF text extraction.

No PDF library is declared as a dependency, so this module implements the
narrow slice of the format needed to pull text out of digitally-produced
resumes: object scanning, Flate/ASCIIHex/ASCII85 stream decoding, page-tree
traversal, and a content-stream tokenizer for the text-showing operators.

Scope limits (deliberate): no OCR, no encrypted files, no JBIG2/DCT image
content, no full CMap support beyond ToUnicode bfchar/bfrange. Text runs are
ordered top-to-bottom then left-to-right per page, which linearizes
multi-column layouts best-effort.
"""

from __future__ import annotations

import base64
import binascii
import re
import zlib
from dataclasses import dataclass, field
from typing import Any

_OBJ_HEADER = re.compile(rb"(?<![0-9])(\d{1,10})\s+(\d{1,5})\s+obj\b")
_WHITESPACE = b"\x00\t\n\x0c\r "
_DELIMITERS = b"()<>[]{}/%"


@dataclass
class Ref:
    num: int


@dataclass
class StreamObject:
    dictionary: dict
    data: bytes


class PdfParseError(Exception):
    pass


def _is_regular(ch: int) -> bool:
    return bytes([ch]) not in _WHITESPACE and bytes([ch]) not in _DELIMITERS


class _Lexer:
    """Cursor over raw PDF bytes with value parsing for the object syntax."""

    def __init__(self, data: bytes, pos: int = 0):
        self.data = data
        self.pos = pos

    def skip_space(self) -> None:
        data, n = self.data, len(self.data)
        while self.pos < n:
            ch = data[self.pos]
            if ch in _WHITESPACE:
                self.pos += 1
            elif ch == 0x25:  # '%' comment runs to end of line
                while self.pos < n and data[self.pos] not in b"\r\n":
                    self.pos += 1
            else:
                return

    def peek_keyword(self, word: bytes) -> bool:
        self.skip_space()
        return self.data.startswith(word, self.pos)

    def parse_value(self) -> Any:
        self.skip_space()
        if self.pos >= len(self.data):
            raise PdfParseError("unexpected end of data")
        ch = self.data[self.pos]
        if self.data.startswith(b"<<", self.pos):
            return self._parse_dict()
        if ch == 0x3C:  # '<'
            return self._parse_hex_string()
        if ch == 0x28:  # '('
            return self._parse_literal_string()
        if ch == 0x2F:  # '/'
            return self._parse_name()
        if ch == 0x5B:  # '['
            return self._parse_array()
        if self.data.startswith(b"true", self.pos):
            self.pos += 4
            return True
        if self.data.startswith(b"false", self.pos):
            self.pos += 5
            return False
        if self.data.startswith(b"null", self.pos):
            self.pos += 4
            return None
        return self._parse_number_or_ref()

    def _parse_dict(self) -> dict:
        self.pos += 2
        out: dict = {}
        while True:
            self.skip_space()
            if self.data.startswith(b">>", self.pos):
                self.pos += 2
                return out
            if self.pos >= len(self.data):
                raise PdfParseError("unterminated dictionary")
            key = self._parse_name()
            out[key] = self.parse_value()

    def _parse_array(self) -> list:
        self.pos += 1
        out = []
        while True:
            self.skip_space()
            if self.pos >= len(self.data):
                raise PdfParseError("unterminated array")
            if self.data[self.pos] == 0x5D:  # ']'
                self.pos += 1
                return out
            out.append(self.parse_value())

    def _parse_name(self) -> str:
        if self.data[self.pos] != 0x2F:
            raise PdfParseError(f"expected name at offset {self.pos}")
        self.pos += 1
        start = self.pos
        while self.pos < len(self.data) and _is_regular(self.data[self.pos]):
            self.pos += 1
        raw = self.data[start:self.pos]
        # resolve #xx escapes
        def _unescape(m: re.Match) -> bytes:
            return bytes([int(m.group(1), 16)])
        raw = re.sub(rb"#([0-9A-Fa-f]{2})", _unescape, raw)
        return raw.decode("latin-1")

    def _parse_literal_string(self) -> bytes:
        self.pos += 1
        out = bytearray()
        depth = 1
        data, n = self.data, len(self.data)
        while self.pos < n:
            ch = data[self.pos]
            if ch == 0x5C:  # backslash
                self.pos += 1
                if self.pos >= n:
                    break
                esc = data[self.pos]
                if esc in b"nrtbf":
                    out.append({0x6E: 10, 0x72: 13, 0x74: 9, 0x62: 8, 0x66: 12}[esc])
                    self.pos += 1
                elif esc in b"()\\":
                    out.append(esc)
                    self.pos += 1
                elif 0x30 <= esc <= 0x37:  # octal, 1-3 digits
                    digits = bytearray()
                    while self.pos < n and len(digits) < 3 and 0x30 <= data[self.pos] <= 0x37:
                        digits.append(data[self.pos])
                        self.pos += 1
                    out.append(int(digits, 8) & 0xFF)
                elif esc in b"\r\n":  # line continuation
                    self.pos += 1
                    if esc == 0x0D and self.pos < n and data[self.pos] == 0x0A:
                        self.pos += 1
                else:
                    out.append(esc)
                    self.pos += 1
            elif ch == 0x28:  # '('
                depth += 1
                out.append(ch)
                self.pos += 1
            elif ch == 0x29:  # ')'
                depth -= 1
                self.pos += 1
                if depth == 0:
                    return bytes(out)
                out.append(ch)
            else:
                out.append(ch)
                self.pos += 1
        raise PdfParseError("unterminated literal string")

    def _parse_hex_string(self) -> bytes:
        self.pos += 1
        end = self.data.find(b">", self.pos)
        if end < 0:
            raise PdfParseError("unterminated hex string")
        hex_digits = re.sub(rb"[^0-9A-Fa-f]", b"", self.data[self.pos:end])
        self.pos = end + 1
        if len(hex_digits) % 2:
            hex_digits += b"0"
        return binascii.unhexlify(hex_digits)

    def _parse_number_or_ref(self) -> Any:
        start = self.pos
        n = len(self.data)
        while self.pos < n and self.data[self.pos] in b"+-.0123456789":
            self.pos += 1
        token = self.data[start:self.pos]
        if not token:
            raise PdfParseError(f"unexpected byte at offset {self.pos}")
        if b"." in token:
            return float(token)
        value = int(token)
        # Look ahead for "gen R" to detect an indirect reference.
        saved = self.pos
        self.skip_space()
        m = re.match(rb"(\d{1,5})\s+R(?![A-Za-z0-9])", self.data[self.pos:self.pos + 16])
        if m and value >= 0:
            self.pos += m.end()
            return Ref(value)
        self.pos = saved
        return value


# ---------------------------------------------------------------------------
# Document model
# ---------------------------------------------------------------------------

class PdfDocument:
    """Lazily-parsed object store over a whole PDF file."""

    def __init__(self, data: bytes):
        self.data = data
        self._offsets: dict[int, int] = {}
        self._cache: dict[int, Any] = {}
        for m in _OBJ_HEADER.finditer(data):
            # later definitions (incremental updates) override earlier ones
            self._offsets[int(m.group(1))] = m.end()

    # -- object access ------------------------------------------------------

    def object(self, num: int) -> Any:
        if num in self._cache:
            return self._cache[num]
        offset = self._offsets.get(num)
        if offset is None:
            return None
        self._cache[num] = None  # break reference cycles
        lexer = _Lexer(self.data, offset)
        try:
            value = lexer.parse_value()
        except PdfParseError:
            return None
        if isinstance(value, dict) and lexer.peek_keyword(b"stream"):
            value = self._read_stream(value, lexer)
        self._cache[num] = value
        return value

    def resolve(self, value: Any) -> Any:
        seen = 0
        while isinstance(value, Ref):
            value = self.object(value.num)
            seen += 1
            if seen > 32:
                return None
        return value

    def _read_stream(self, dictionary: dict, lexer: _Lexer) -> StreamObject:
        lexer.skip_space()
        pos = lexer.pos + len(b"stream")
        if self.data.startswith(b"\r\n", pos):
            pos += 2
        elif self.data.startswith(b"\n", pos) or self.data.startswith(b"\r", pos):
            pos += 1
        length = self.resolve(dictionary.get("Length"))
        raw = None
        if isinstance(length, int) and 0 <= length <= len(self.data) - pos:
            candidate = self.data[pos:pos + length]
            tail = self.data[pos + length:pos + length + 20].lstrip(bytes(_WHITESPACE))
            if tail.startswith(b"endstream"):
                raw = candidate
        if raw is None:  # /Length missing or wrong; fall back to a scan
            end = self.data.find(b"endstream", pos)
            raw = self.data[pos:end if end >= 0 else len(self.data)].rstrip(b"\r\n")
        return StreamObject(dictionary, raw)

    # -- structure ------------------------------------------------------------

    def is_encrypted(self) -> bool:
        for m in re.finditer(rb"trailer", self.data):
            lexer = _Lexer(self.data, m.end())
            try:
                trailer = lexer.parse_value()
            except PdfParseError:
                continue
            if isinstance(trailer, dict) and "Encrypt" in trailer:
                return True
        # cross-reference streams carry the trailer dictionary themselves
        for num in self._offsets:
            value = self.object(num)
            dictionary = value.dictionary if isinstance(value, StreamObject) else value
            if isinstance(dictionary, dict) and dictionary.get("Type") == "XRef" \
                    and "Encrypt" in dictionary:
                return True
        return False

    def catalog(self) -> dict | None:
        for m in re.finditer(rb"trailer", self.data):
            lexer = _Lexer(self.data, m.end())
            try:
                trailer = lexer.parse_value()
            except PdfParseError:
                continue
            if isinstance(trailer, dict):
                root = self.resolve(trailer.get("Root"))
                if isinstance(root, dict) and "Pages" in root:
                    return root
        for num in self._offsets:
            value = self.object(num)
            if isinstance(value, dict) and value.get("Type") == "Catalog":
                return value
        return None

    def pages(self) -> list[dict]:
        catalog = self.catalog()
        if not catalog:
            return []
        root = self.resolve(catalog.get("Pages"))
        out: list[dict] = []
        self._walk_pages(root, inherited={}, out=out, depth=0)
        return out

    def _walk_pages(self, node: Any, inherited: dict, out: list[dict], depth: int) -> None:
        node = self.resolve(node)
        if not isinstance(node, dict) or depth > 64:
            return
        merged = dict(inherited)
        for key in ("Resources", "MediaBox"):
            if key in node:
                merged[key] = node[key]
        if node.get("Type") == "Page" or ("Contents" in node and "Kids" not in node):
            page = dict(node)
            for key, value in merged.items():
                page.setdefault(key, value)
            out.append(page)
            return
        for kid in self.resolve(node.get("Kids")) or []:
            self._walk_pages(kid, merged, out, depth + 1)

    def stream_bytes(self, value: Any) -> bytes:
        value = self.resolve(value)
        if not isinstance(value, StreamObject):
            return b""
        return _decode_stream(value, self)

    def page_content(self, page: dict) -> bytes:
        contents = self.resolve(page.get("Contents"))
        if isinstance(contents, list):
            return b"\n".join(self.stream_bytes(item) for item in contents)
        if isinstance(contents, StreamObject):
            return _decode_stream(contents, self)
        return b""


def _decode_stream(stream: StreamObject, doc: PdfDocument) -> bytes:
    filters = doc.resolve(stream.dictionary.get("Filter"))
    if filters is None:
        chain: list[str] = []
    elif isinstance(filters, list):
        chain = [doc.resolve(f) for f in filters]
    else:
        chain = [filters]
    data = stream.data
    for name in chain:
        try:
            if name == "FlateDecode":
                data = zlib.decompress(data)
            elif name == "ASCIIHexDecode":
                data = binascii.unhexlify(
                    re.sub(rb"[^0-9A-Fa-f]", b"", data.rstrip(b">")))
            elif name == "ASCII85Decode":
                data = base64.a85decode(data.rstrip(b"~>"), adobe=False,
                                        ignorechars=b" \t\r\n")
            else:
                return b""  # unsupported filter: yield no text rather than noise
        except (zlib.error, binascii.Error, ValueError):
            return b""
    return data


# ---------------------------------------------------------------------------
# Font decoding (simple fonts + ToUnicode CMaps)
# ---------------------------------------------------------------------------

@dataclass
class FontInfo:
    two_byte: bool = False
    to_unicode: dict[int, str] | None = None

    def decode(self, raw: bytes) -> str:
        if self.to_unicode is not None:
            width = 2 if self.two_byte else 1
            chars = []
            for i in range(0, len(raw) - width + 1, width):
                code = int.from_bytes(raw[i:i + width], "big")
                chars.append(self.to_unicode.get(code, ""))
            return "".join(chars)
        if self.two_byte:
            return ""  # composite font without ToUnicode: glyph ids, not text
        try:
            return raw.decode("cp1252")
        except UnicodeDecodeError:
            return raw.decode("latin-1", errors="replace")


_HEX_PAIR = re.compile(rb"<([0-9A-Fa-f]+)>")


def _parse_to_unicode(data: bytes) -> dict[int, str]:
    """Extract code->text mappings from a ToUnicode CMap stream."""
    mapping: dict[int, str] = {}

    def utf16(hexstr: bytes) -> str:
        raw = binascii.unhexlify(hexstr if len(hexstr) % 2 == 0 else hexstr + b"0")
        try:
            return raw.decode("utf-16-be")
        except UnicodeDecodeError:
            return ""

    for m in re.finditer(rb"beginbfchar(.*?)endbfchar", data, re.S):
        pairs = _HEX_PAIR.findall(m.group(1))
        for src, dst in zip(pairs[0::2], pairs[1::2]):
            mapping[int(src, 16)] = utf16(dst)
    for m in re.finditer(rb"beginbfrange(.*?)endbfrange", data, re.S):
        body = m.group(1)
        for line in re.finditer(
                rb"<([0-9A-Fa-f]+)>\s*<([0-9A-Fa-f]+)>\s*(\[(?:[^\]]*)\]|<[0-9A-Fa-f]+>)",
                body):
            lo, hi = int(line.group(1), 16), int(line.group(2), 16)
            dst = line.group(3)
            if dst.startswith(b"["):
                targets = _HEX_PAIR.findall(dst)
                for offset, target in enumerate(targets):
                    if lo + offset <= hi:
                        mapping[lo + offset] = utf16(target)
            else:
                base_hex = dst.strip(b"<>")
                base = int(base_hex, 16)
                for offset in range(min(hi - lo + 1, 65536)):
                    raw = (base + offset).to_bytes(max(2, len(base_hex) // 2), "big")
                    try:
                        mapping[lo + offset] = raw.decode("utf-16-be")
                    except UnicodeDecodeError:
                        pass
    return mapping


def _load_fonts(doc: PdfDocument, page: dict) -> dict[str, FontInfo]:
    fonts: dict[str, FontInfo] = {}
    resources = doc.resolve(page.get("Resources"))
    if not isinstance(resources, dict):
        return fonts
    font_map = doc.resolve(resources.get("Font"))
    if not isinstance(font_map, dict):
        return fonts
    for name, ref in font_map.items():
        font = doc.resolve(ref)
        if not isinstance(font, dict):
            continue
        info = FontInfo()
        encoding = doc.resolve(font.get("Encoding"))
        if font.get("Subtype") == "Type0" or encoding in ("Identity-H", "Identity-V"):
            info.two_byte = True
        to_unicode = doc.resolve(font.get("ToUnicode"))
        if isinstance(to_unicode, StreamObject):
            cmap = _parse_to_unicode(_decode_stream(to_unicode, doc))
            if cmap:
                info.to_unicode = cmap
        fonts[name] = info
    return fonts


# ---------------------------------------------------------------------------
# Content-stream interpretation
# ---------------------------------------------------------------------------

@dataclass
class _TextRun:
    y: float
    x: float
    seq: int
    text: str


class _ContentScanner:
    """Executes just enough of the content stream to place text runs."""

    def __init__(self, fonts: dict[str, FontInfo]):
        self.fonts = fonts
        self.runs: list[_TextRun] = []
        self._seq = 0
        self._reset_text_state()
        self.font = FontInfo()

    def _reset_text_state(self) -> None:
        self.tm = [1.0, 0.0, 0.0, 1.0, 0.0, 0.0]
        self.lm = list(self.tm)
        self.leading = 0.0

    def _translate_line(self, tx: float, ty: float) -> None:
        a, b, c, d, e, f = self.lm
        self.lm = [a, b, c, d, tx * a + ty * c + e, tx * b + ty * d + f]
        self.tm = list(self.lm)

    def _emit(self, raw: bytes) -> None:
        text = self.font.decode(raw)
        if text:
            self.runs.append(_TextRun(self.tm[5], self.tm[4], self._seq, text))
            self._seq += 1

    def feed(self, content: bytes) -> None:
        lexer = _Lexer(content)
        stack: list[Any] = []
        n = len(content)
        while True:
            lexer.skip_space()
            if lexer.pos >= n:
                return
            ch = content[lexer.pos]
            if ch in b"/<([+-.0123456789" or content.startswith(b"true", lexer.pos) \
                    or content.startswith(b"false", lexer.pos) \
                    or content.startswith(b"null", lexer.pos):
                try:
                    stack.append(lexer.parse_value())
                except PdfParseError:
                    lexer.pos += 1
                continue
            start = lexer.pos
            while lexer.pos < n and _is_regular(content[lexer.pos]):
                lexer.pos += 1
            if lexer.pos == start:
                lexer.pos += 1  # stray delimiter; skip
                continue
            op = content[start:lexer.pos]
            self._apply(op, stack, lexer)
            stack.clear()

    def _apply(self, op: bytes, stack: list, lexer: _Lexer) -> None:
        try:
            if op == b"BT":
                self._reset_text_state()
            elif op == b"Tf" and len(stack) >= 2:
                self.font = self.fonts.get(stack[-2], FontInfo())
            elif op == b"TL" and stack:
                self.leading = float(stack[-1])
            elif op in (b"Td", b"TD") and len(stack) >= 2:
                tx, ty = float(stack[-2]), float(stack[-1])
                if op == b"TD":
                    self.leading = -ty
                self._translate_line(tx, ty)
            elif op == b"Tm" and len(stack) >= 6:
                self.lm = [float(v) for v in stack[-6:]]
                self.tm = list(self.lm)
            elif op == b"T*":
                self._translate_line(0, -self.leading)
            elif op == b"Tj" and stack and isinstance(stack[-1], bytes):
                self._emit(stack[-1])
            elif op == b"'" and stack and isinstance(stack[-1], bytes):
                self._translate_line(0, -self.leading)
                self._emit(stack[-1])
            elif op == b'"' and len(stack) >= 3 and isinstance(stack[-1], bytes):
                self._translate_line(0, -self.leading)
                self._emit(stack[-1])
            elif op == b"TJ" and stack and isinstance(stack[-1], list):
                parts: list[str] = []
                for item in stack[-1]:
                    if isinstance(item, bytes):
                        parts.append(self.font.decode(item))
                    elif isinstance(item, (int, float)) and item < -180:
                        parts.append(" ")  # large kern gap reads as a word break
                text = "".join(parts)
                if text.strip():
                    self.runs.append(_TextRun(self.tm[5], self.tm[4], self._seq, text))
                    self._seq += 1
            elif op == b"BI":
                end = lexer.data.find(b"EI", lexer.pos)
                lexer.pos = end + 2 if end >= 0 else len(lexer.data)
        except (TypeError, ValueError):
            pass  # malformed operands: skip the operator


def _runs_to_text(runs: list[_TextRun]) -> str:
    if not runs:
        return ""
    ordered = sorted(runs, key=lambda r: (-round(r.y, 1), r.x, r.seq))
    lines: list[str] = []
    current_y: float | None = None
    current: list[str] = []
    for run in ordered:
        y = round(run.y, 1)
        if current_y is None or abs(y - current_y) > 0.5:
            if current:
                lines.append(" ".join(current))
            current = [run.text]
            current_y = y
        else:
            current.append(run.text)
    if current:
        lines.append(" ".join(current))
    return "\n".join(line.rstrip() for line in lines)


def extract_pages(data: bytes) -> list[str]:
    """Return per-page text for a PDF byte blob. Raises PdfParseError when the
    file yields no usable page tree."""
    doc = PdfDocument(data)
    pages = doc.pages()
    if not pages:
        raise PdfParseError("no page tree found")
    out = []
    for page in pages:
        scanner = _ContentScanner(_load_fonts(doc, page))
        scanner.feed(doc.page_content(page))
        out.append(_runs_to_text(scanner.runs))
    return out


def is_encrypted(data: bytes) -> bool:
    return PdfDocument(data).is_encrypted()

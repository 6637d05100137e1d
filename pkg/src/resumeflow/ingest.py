"""Resume input handling: PDF bytes or plain text in, normalized text out."""

from __future__ import annotations

import enum
import unicodedata
from dataclasses import dataclass

from . import pdftext
from .errors import EncryptedPdf, NoExtractableText, NotAPdf

PDF_MAGIC = b"%PDF-"
PAGE_SEPARATOR = "\f"


class Origin(enum.Enum):
    PDF_UPLOAD = "pdf_upload"
    PLAIN_TEXT = "plain_text"


@dataclass(frozen=True)
class SourceDocument:
    origin: Origin
    raw_text: str
    page_count: int
    byte_size: int


def normalize_text(raw: str) -> str:
    """Whitespace/Unicode cleanup that never alters content words.

    NFC normalization, CRLF (and stray CR) to LF, trailing whitespace per
    line stripped, runs of more than two newlines collapsed to two.
    Idempotent by construction.
    """
    text = unicodedata.normalize("NFC", raw)
    text = text.replace("\r\n", "\n").replace("\r", "\n")
    lines = [line.rstrip() for line in text.split("\n")]
    out: list[str] = []
    newline_run = 0
    for line in lines:
        if line:
            newline_run = 0
            out.append(line)
        else:
            newline_run += 1
            if newline_run <= 1:
                out.append(line)
    # drop leading/trailing blank lines introduced by the collapse
    while out and not out[0]:
        out.pop(0)
    while out and not out[-1]:
        out.pop()
    return "\n".join(out)


def from_text(text: str) -> SourceDocument:
    """Wrap pasted resume text; bypasses PDF extraction entirely."""
    normalized = normalize_text(text)
    if not normalized:
        raise NoExtractableText()
    return SourceDocument(
        origin=Origin.PLAIN_TEXT,
        raw_text=normalized,
        page_count=0,
        byte_size=len(text.encode("utf-8")),
    )


def extract_pdf_text(data: bytes) -> SourceDocument:
    """Extract text from PDF bytes, page by page in page order.

    Pages are joined with a form-feed separator. Raises NotAPdf when the
    magic header is missing, EncryptedPdf for protected files, and
    NoExtractableText for image-only scans (no OCR is attempted).
    """
    if not data.startswith(PDF_MAGIC):
        raise NotAPdf()
    if pdftext.is_encrypted(data):
        raise EncryptedPdf()
    try:
        pages = pdftext.extract_pages(data)
    except pdftext.PdfParseError as exc:
        raise NoExtractableText() from exc
    if not any(page.strip() for page in pages):
        raise NoExtractableText()
    raw_text = PAGE_SEPARATOR.join(normalize_text(page) for page in pages)
    return SourceDocument(
        origin=Origin.PDF_UPLOAD,
        raw_text=raw_text,
        page_count=len(pages),
        byte_size=len(data),
    )

"""Tolerant HTML tree building, DOM skeletons and page content inspection."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import lru_cache
from html.parser import HTMLParser

from .errors import EmptyDocument
from .lists import default_list
from .textmetrics import normalized_similarity

VOID_TAGS = frozenset(
    "area base br col embed hr img input link meta param source track wbr keygen".split()
)
HEAD_TAGS = frozenset("base link meta title style script noscript".split())
# tags whose repeated opening implicitly closes the previous sibling
SELF_NESTING_CLOSERS = frozenset("p li option tr td th dt dd".split())
INVISIBLE_TAGS = frozenset("script style noscript template head".split())

DEFAULT_SIMILARITY_THRESHOLD = 0.8

_DOC_KEYWORDS = re.compile(r"passport|driver'?s?\s+licen[cs]e|\bid[\s_-]?card\b")
_INPUT_SKIP_TYPES = frozenset("hidden submit button reset image".split())


@dataclass
class Element:
    tag: str
    attrs: dict = field(default_factory=dict)
    children: list = field(default_factory=list)  # Element | str

    def iter(self):
        yield self
        for child in self.children:
            if isinstance(child, Element):
                yield from child.iter()


class _TreeBuilder(HTMLParser):
    def __init__(self):
        super().__init__(convert_charrefs=True)
        self.root: Element | None = None
        self.head: Element | None = None
        self.body: Element | None = None
        self.stack: list[Element] = []

    def _ensure_root(self):
        if self.root is None:
            self.root = Element("html")
            self.stack = [self.root]

    def _ensure_head(self):
        self._ensure_root()
        if self.head is None:
            self.head = Element("head")
            self.root.children.insert(0, self.head)
            self.stack = [self.root, self.head]
        elif self.head not in self.stack:
            self.stack = [self.root, self.head]

    def _ensure_body(self):
        self._ensure_root()
        if self.body is None:
            self.body = Element("body")
            self.root.children.append(self.body)
            self.stack = [self.root, self.body]

    def _attach(self, element: Element, void: bool):
        self.stack[-1].children.append(element)
        if not void:
            self.stack.append(element)

    def handle_starttag(self, tag, attrs):
        tag = tag.lower()
        attrs = {k.lower(): (v if v is not None else "") for k, v in attrs}
        if tag == "html":
            if self.root is None:
                self.root = Element("html", attrs)
                self.stack = [self.root]
            return
        if tag == "head":
            if self.head is None and self.body is None:
                self._ensure_head()
                self.head.attrs.update(attrs)
            return
        if tag == "body":
            if self.body is None:
                self._ensure_body()
                self.body.attrs.update(attrs)
            return
        if self.body is None and tag in HEAD_TAGS:
            if self.head is None or self.head not in self.stack:
                self._ensure_head()
        elif self.body is None:
            self._ensure_body()
        top = self.stack[-1]
        if top.tag == tag and tag in SELF_NESTING_CLOSERS:
            self.stack.pop()
        self._attach(Element(tag, attrs), tag in VOID_TAGS)

    def handle_startendtag(self, tag, attrs):
        self.handle_starttag(tag, attrs)
        tag = tag.lower()
        if tag not in VOID_TAGS and tag not in ("html", "head", "body"):
            self.handle_endtag(tag)

    def handle_endtag(self, tag):
        tag = tag.lower()
        if tag in ("html", "body"):
            # content after </body> still belongs to the body
            return
        if tag == "head":
            if self.head is not None and self.head in self.stack:
                self.stack = self.stack[: self.stack.index(self.head)]
            return
        for i in range(len(self.stack) - 1, 0, -1):
            if self.stack[i].tag == tag:
                del self.stack[i:]
                return

    def handle_data(self, data):
        if not data.strip() and (self.root is None or self.stack[-1] in (self.root, self.head)):
            return
        if self.root is None or (self.body is None and self.stack[-1] in (self.root, self.head)):
            self._ensure_body()
        self.stack[-1].children.append(data)


def parse_html(html: str) -> Element:
    """Parse HTML leniently into an element tree rooted at ``html``."""
    builder = _TreeBuilder()
    builder.feed(html)
    builder.close()
    if builder.root is None:
        raise EmptyDocument("no element could be recovered")
    return builder.root


@dataclass(frozen=True)
class SkeletonNode:
    tag: str
    children: tuple["SkeletonNode", ...] = ()


@dataclass(frozen=True)
class DomSkeleton:
    root: SkeletonNode

    def tokens(self) -> tuple[str, ...]:
        """Preorder tag sequence with '(' / ')' marking descent and ascent."""
        out: list[str] = []

        def walk(node):
            out.append(node.tag)
            if node.children:
                out.append("(")
                for child in node.children:
                    walk(child)
                out.append(")")

        walk(self.root)
        return tuple(out)

    def preorder(self) -> list[str]:
        return [t for t in self.tokens() if t not in ("(", ")")]

    def to_html(self) -> str:
        def render(node):
            if node.tag in VOID_TAGS:
                return f"<{node.tag}>"
            inner = "".join(render(c) for c in node.children)
            return f"<{node.tag}>{inner}</{node.tag}>"

        return render(self.root)


def _strip(element: Element) -> SkeletonNode:
    return SkeletonNode(
        element.tag,
        tuple(_strip(c) for c in element.children if isinstance(c, Element)),
    )


def extract_skeleton(html: str) -> DomSkeleton:
    if not html or not html.strip():
        raise EmptyDocument("document is empty")
    return DomSkeleton(_strip(parse_html(html)))


def skeleton_similarity(a: DomSkeleton, b: DomSkeleton) -> float:
    return normalized_similarity(a.tokens(), b.tokens())


@lru_cache(maxsize=None)
def default_validity_keywords() -> tuple[str, ...]:
    return tuple(default_list("validity_keywords"))


@lru_cache(maxsize=None)
def default_captcha_markers() -> tuple[str, ...]:
    return tuple(default_list("captcha_markers"))


@dataclass(frozen=True)
class ContentProfile:
    title: str = ""
    password_inputs: int = 0
    email_inputs: int = 0
    card_inputs: int = 0
    document_upload_inputs: int = 0
    form_count: int = 0
    fake_invalid: bool = False
    captcha_gated: bool = False
    script_count: int = 0

    @property
    def sensitive_inputs(self) -> int:
        return self.password_inputs + self.email_inputs + self.card_inputs + self.document_upload_inputs


def normalize_text(text: str) -> str:
    return " ".join(text.split()).lower()


def contains_keyword(text: str, keywords) -> bool:
    text = normalize_text(text)
    for keyword in keywords:
        pattern = r"(?<!\w)" + re.escape(normalize_text(keyword)) + r"(?!\w)"
        if re.search(pattern, text):
            return True
    return False


def _collect_text(element: Element, out: list[str], skip=INVISIBLE_TAGS):
    for child in element.children:
        if isinstance(child, str):
            out.append(child)
        elif child.tag not in skip:
            _collect_text(child, out, skip)
            out.append(" ")


def visible_text(root: Element) -> str:
    parts: list[str] = []
    _collect_text(root, parts)
    return " ".join("".join(parts).split())


def page_title(root: Element) -> str:
    for el in root.iter():
        if el.tag == "title":
            return " ".join("".join(c for c in el.children if isinstance(c, str)).split())
    return ""


def _classify_input(attrs: dict, preceding_text: str) -> str | None:
    kind = attrs.get("type", "text").lower()
    if kind in _INPUT_SKIP_TYPES:
        return None
    name_id = (attrs.get("name", "") + " " + attrs.get("id", "")).lower()
    if kind == "password":
        return "password"
    if kind == "email" or "email" in name_id:
        return "email"
    card_tokens = name_id + " " + attrs.get("autocomplete", "").lower()
    if any(tok in card_tokens for tok in ("card", "cc-number", "cvv")) and not _DOC_KEYWORDS.search(card_tokens):
        return "card"
    if kind == "file":
        return "document"
    described = " ".join(
        attrs.get(k, "") for k in ("name", "id", "placeholder", "aria-label", "accept")
    ).lower()
    if _DOC_KEYWORDS.search(described) or _DOC_KEYWORDS.search(preceding_text.lower()):
        return "document"
    return None


def _has_marker(attrs: dict, markers) -> bool:
    for key, value in attrs.items():
        if key in ("class", "id", "src") or key.startswith("data-"):
            haystack = (key + " " + value).lower()
            if any(m in haystack for m in markers):
                return True
    return False


def inspect_content(html: str, http_status: int, validity_keywords=None, captcha_markers=None) -> ContentProfile:
    """Count input-seeking fields and detect fake error pages and captcha gates."""
    if not 100 <= int(http_status) <= 599:
        raise ValueError(f"invalid HTTP status {http_status}")
    validity_keywords = default_validity_keywords() if validity_keywords is None else validity_keywords
    captcha_markers = default_captcha_markers() if captcha_markers is None else captcha_markers
    markers = [m.lower() for m in captcha_markers]

    try:
        root = parse_html(html)
    except EmptyDocument:
        return ContentProfile()

    counts = {"password": 0, "email": 0, "card": 0, "document": 0}
    forms = scripts = 0
    captcha = False
    recent_text: list[str] = []

    def walk(el: Element, in_invisible: bool):
        nonlocal forms, scripts, captcha
        if el.tag == "form":
            forms += 1
        elif el.tag == "script":
            scripts += 1
        elif el.tag == "input":
            kind = _classify_input(el.attrs, "".join(recent_text)[-200:])
            if kind:
                counts[kind] += 1
            recent_text.clear()
        if not captcha and _has_marker(el.attrs, markers):
            captcha = True
        hidden = in_invisible or el.tag in INVISIBLE_TAGS
        for child in el.children:
            if isinstance(child, Element):
                walk(child, hidden)
            elif not hidden:
                recent_text.append(child)

    walk(root, False)

    text = visible_text(root)
    fake_invalid = int(http_status) == 200 and contains_keyword(text, validity_keywords)
    return ContentProfile(
        title=page_title(root),
        password_inputs=counts["password"],
        email_inputs=counts["email"],
        card_inputs=counts["card"],
        document_upload_inputs=counts["document"],
        form_count=forms,
        fake_invalid=fake_invalid,
        captcha_gated=captcha and counts["password"] + forms == 0,
        script_count=scripts,
    )

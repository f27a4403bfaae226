"""Best-effort parser for the SmartApp subset of Groovy.

Covers exactly the constructs fact extraction consumes: the definition
metadata map, preferences/section/input declarations, def methods,
subscribe calls (with or without parens), if-comparisons of
device.currentX / device.currentValue("x") against string literals,
device.cmd() / device?.cmd() calls, and device.currentX property reads.
Everything else degrades to `other` statements; the only fatal inputs are
unbalanced braces and unterminated string literals.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

PSEUDO_DEVICES = frozenset({"app", "location"})

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_NUM = re.compile(r"[0-9][0-9A-Za-z_.]*")
# GString interpolations that read a device attribute: $dev.currentX or ${dev.currentX}
_GSTRING_READ = re.compile(
    r"\$\{?([A-Za-z_][A-Za-z0-9_]*)\.current([A-Za-z][A-Za-z0-9_]*)\}?"
)
_TWO_CHAR_OPS = ("==", "!=", "<=", ">=", "&&", "||", "?.", "->", "=>", "*.")


class AppParseError(ValueError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass(frozen=True)
class Token:
    kind: str  # ident | str | num | punct
    text: str
    line: int
    col: int
    start: int
    end: int
    gstring: bool = False  # double-quoted, may interpolate


@dataclass(frozen=True)
class AppMeta:
    name: str = ""
    description: str = ""


@dataclass(frozen=True)
class InputDecl:
    device_id: str
    capability: str
    section_title: str = ""


@dataclass(frozen=True)
class Subscription:
    device_id: str
    attribute: str
    value: str | None
    handler: str


@dataclass(frozen=True)
class Span:
    line: int
    col: int
    start: int
    end: int


@dataclass(frozen=True)
class CallArg:
    text: str
    quoted: bool


@dataclass(frozen=True)
class Stmt:
    kind: str  # condition | device_call | device_property | other
    span: Span
    device_id: str | None = None
    name: str | None = None  # attribute/command; callee name for `other` calls
    value: str | None = None  # compared literal for conditions
    body: tuple[Stmt, ...] = ()
    args: tuple[CallArg, ...] = ()


@dataclass
class SmartAppAst:
    meta: AppMeta = AppMeta()
    inputs: list[InputDecl] = field(default_factory=list)
    methods: dict[str, list[Stmt]] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)
    # char-offset spans of `{`..`}` pairs, used by the mutation injectors
    method_body_spans: dict[str, tuple[int, int]] = field(default_factory=dict)
    preferences_span: tuple[int, int] | None = None


def tokenize(source: str) -> list[Token]:
    toks: list[Token] = []
    i, line, col = 0, 1, 0
    n = len(source)
    while i < n:
        ch = source[i]
        if ch == "\n":
            i += 1
            line += 1
            col = 0
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if source.startswith("//", i):
            nl = source.find("\n", i)
            i = n if nl < 0 else nl
            continue
        if source.startswith("/*", i):
            end = source.find("*/", i + 2)
            if end < 0:
                i = n
                continue
            skipped = source[i : end + 2]
            line += skipped.count("\n")
            i = end + 2
            col = 0
            continue
        if ch in "\"'":
            tok, i2 = _scan_string(source, i, line, col)
            toks.append(tok)
            line += source[i:i2].count("\n")
            col = tok.col + (i2 - i)
            i = i2
            continue
        m = _IDENT.match(source, i)
        if m:
            toks.append(Token("ident", m.group(), line, col, i, m.end()))
            col += m.end() - i
            i = m.end()
            continue
        m = _NUM.match(source, i)
        if m:
            toks.append(Token("num", m.group(), line, col, i, m.end()))
            col += m.end() - i
            i = m.end()
            continue
        for op in _TWO_CHAR_OPS:
            if source.startswith(op, i):
                toks.append(Token("punct", op, line, col, i, i + 2))
                i += 2
                col += 2
                break
        else:
            toks.append(Token("punct", ch, line, col, i, i + 1))
            i += 1
            col += 1
    return toks


def _scan_string(source: str, i: int, line: int, col: int) -> tuple[Token, int]:
    quote = source[i]
    gstring = quote == '"'
    if source.startswith(quote * 3, i):
        end = source.find(quote * 3, i + 3)
        if end < 0:
            raise AppParseError("unterminated triple-quoted string", line)
        return Token("str", source[i + 3 : end], line, col, i, end + 3, gstring), end + 3
    j = i + 1
    out: list[str] = []
    n = len(source)
    while j < n:
        ch = source[j]
        if ch == "\\" and j + 1 < n:
            out.append(source[j : j + 2])
            j += 2
            continue
        if ch == quote:
            return Token("str", "".join(out), line, col, i, j + 1, gstring), j + 1
        if ch == "\n":
            break
        out.append(ch)
        j += 1
    raise AppParseError("unterminated string literal", line)


def _check_braces(toks: list[Token]) -> None:
    stack: list[Token] = []
    for t in toks:
        if t.kind != "punct":
            continue
        if t.text == "{":
            stack.append(t)
        elif t.text == "}":
            if not stack:
                raise AppParseError("unbalanced '}'", t.line)
            stack.pop()
    if stack:
        raise AppParseError("unclosed '{'", stack[-1].line)


def _match_brace(toks: list[Token], open_idx: int) -> int:
    """Index of the `}` matching toks[open_idx] (which must be `{`)."""
    depth = 0
    for j in range(open_idx, len(toks)):
        t = toks[j]
        if t.kind == "punct" and t.text == "{":
            depth += 1
        elif t.kind == "punct" and t.text == "}":
            depth -= 1
            if depth == 0:
                return j
    raise AppParseError("unclosed '{'", toks[open_idx].line)


def _match_paren(toks: list[Token], open_idx: int) -> int:
    depth = 0
    for j in range(open_idx, len(toks)):
        t = toks[j]
        if t.kind == "punct" and t.text == "(":
            depth += 1
        elif t.kind == "punct" and t.text == ")":
            depth -= 1
            if depth == 0:
                return j
    # best effort: run to the end
    return len(toks) - 1


def parse_app(source: str) -> SmartAppAst:
    """Total on the supported corpus; fatal only for unbalanced braces/quotes."""
    toks = tokenize(source)
    _check_braces(toks)
    ast = SmartAppAst()
    i, n = 0, len(toks)
    while i < n:
        t = toks[i]
        if t.kind != "ident":
            i += 1
            continue
        if t.text == "definition":
            i = _parse_definition(toks, i + 1, ast)
        elif t.text == "preferences" and _is_punct(toks, i + 1, "{"):
            close = _match_brace(toks, i + 1)
            ast.preferences_span = (toks[i + 1].start, toks[close].start)
            _parse_preferences(toks[i + 2 : close], ast)
            i = close + 1
        elif t.text == "def" and i + 1 < n and toks[i + 1].kind == "ident":
            i = _parse_method(toks, i, ast)
        else:
            i += 1
    return ast


def _is_punct(toks: list[Token], i: int, text: str) -> bool:
    return i < len(toks) and toks[i].kind == "punct" and toks[i].text == text


def _parse_definition(toks: list[Token], i: int, ast: SmartAppAst) -> int:
    if _is_punct(toks, i, "("):
        end = _match_paren(toks, i)
        slice_ = toks[i + 1 : end]
        nxt = end + 1
    else:
        # paren-less form: consume name:value pairs greedily
        j = i
        while j + 2 < len(toks) and toks[j].kind == "ident" and _is_punct(toks, j + 1, ":"):
            j += 3
            if not _is_punct(toks, j, ","):
                break
            j += 1
        slice_ = toks[i:j]
        nxt = j
    pairs: dict[str, str] = {}
    k = 0
    while k < len(slice_):
        if (
            slice_[k].kind == "ident"
            and _is_punct(slice_, k + 1, ":")
            and k + 2 < len(slice_)
            and slice_[k + 2].kind in ("str", "ident", "num")
        ):
            pairs.setdefault(slice_[k].text, slice_[k + 2].text)
            k += 3
        else:
            k += 1
    ast.meta = AppMeta(name=pairs.get("name", ""), description=pairs.get("description", ""))
    return nxt


def _parse_preferences(toks: list[Token], ast: SmartAppAst) -> None:
    i, n = 0, len(toks)
    section = ""
    while i < n:
        t = toks[i]
        if t.kind == "ident" and t.text == "section":
            title = ""
            j = i + 1
            if _is_punct(toks, j, "("):
                end = _match_paren(toks, j)
                for a in toks[j + 1 : end]:
                    if a.kind == "str":
                        title = a.text
                        break
                j = end + 1
            if _is_punct(toks, j, "{"):
                close = _match_brace(toks, j)
                old = section
                section = title
                _parse_inputs(toks[j + 1 : close], ast, section)
                section = old
                i = close + 1
            else:
                i = j
        elif t.kind == "ident" and t.text == "input":
            i = _parse_one_input(toks, i, ast, section)
        else:
            i += 1


def _parse_inputs(toks: list[Token], ast: SmartAppAst, section: str) -> None:
    i = 0
    while i < len(toks):
        if toks[i].kind == "ident" and toks[i].text == "input":
            i = _parse_one_input(toks, i, ast, section)
        else:
            i += 1


def _parse_one_input(toks: list[Token], i: int, ast: SmartAppAst, section: str) -> int:
    # args run until the next input/section keyword or closing brace at this level
    j = i + 1
    if _is_punct(toks, j, "("):
        end = _match_paren(toks, j)
        args = toks[j + 1 : end]
        nxt = end + 1
    else:
        args = []
        while j < len(toks):
            t = toks[j]
            if t.kind == "ident" and t.text in ("input", "section"):
                break
            if t.kind == "punct" and t.text in ("{", "}"):
                break
            args.append(t)
            j += 1
        nxt = j
    strings = [a.text for a in args if a.kind == "str"]
    if len(strings) >= 2 and strings[1].startswith("capability."):
        device_id, capability = strings[0], strings[1][len("capability.") :]
        if capability and not any(d.device_id == device_id for d in ast.inputs):
            ast.inputs.append(InputDecl(device_id, capability, section))
        elif any(d.device_id == device_id for d in ast.inputs):
            ast.warnings.append(f"duplicate input id {device_id!r} ignored")
    return nxt


def _parse_method(toks: list[Token], i: int, ast: SmartAppAst) -> int:
    name = toks[i + 1].text
    j = i + 2
    if _is_punct(toks, j, "("):
        j = _match_paren(toks, j) + 1
    if not _is_punct(toks, j, "{"):
        return i + 2  # `def x = ...` at top level; not a method
    close = _match_brace(toks, j)
    body = _parse_statements(toks[j + 1 : close], ast)
    if name in ast.methods:
        ast.warnings.append(f"duplicate method {name!r}; first definition kept")
    else:
        ast.methods[name] = body
        ast.method_body_spans[name] = (toks[j].start, toks[close].start)
    return close + 1


def _span(toks: list[Token], i: int, j: int) -> Span:
    first, last = toks[i], toks[max(i, j - 1)]
    return Span(first.line, first.col, first.start, last.end)


def _decap(name: str) -> str:
    return name[:1].lower() + name[1:] if name else name


def _gstring_reads(toks: list[Token], i: int, j: int) -> list[Stmt]:
    out = []
    for t in toks[i:j]:
        if t.kind == "str" and t.gstring:
            for m in _GSTRING_READ.finditer(t.text):
                span = Span(t.line, t.col, t.start, t.end)
                out.append(
                    Stmt("device_property", span, device_id=m.group(1), name=_decap(m.group(2)))
                )
    return out


def _collect_args(toks: list[Token]) -> tuple[CallArg, ...]:
    """Each top-level comma-separated argument, represented by its first token."""
    args: list[CallArg] = []
    depth = 0
    expect_new = True
    for t in toks:
        if t.kind == "punct":
            if t.text in "([":
                depth += 1
            elif t.text in ")]":
                depth -= 1
            elif t.text == "," and depth == 0:
                expect_new = True
            continue
        if expect_new and t.kind in ("ident", "str", "num"):
            args.append(CallArg(t.text, t.kind == "str"))
            expect_new = False
    return tuple(args)


def _line_end(toks: list[Token], i: int) -> int:
    """First index past i whose token starts on a later line."""
    line = toks[i].line
    j = i
    while j < len(toks) and toks[j].line == line:
        j += 1
    return j


def _parse_statements(toks: list[Token], ast: SmartAppAst) -> list[Stmt]:
    stmts: list[Stmt] = []
    i, n = 0, len(toks)
    while i < n:
        t = toks[i]
        if t.kind != "ident":
            if t.kind == "punct" and t.text == "{":
                close = _match_brace(toks, i)
                stmts.extend(_parse_statements(toks[i + 1 : close], ast))
                i = close + 1
            else:
                i += 1
            continue
        if t.text == "if" and _is_punct(toks, i + 1, "("):
            i = _parse_if(toks, i, ast, stmts)
            continue
        if _is_punct(toks, i + 1, ".") or _is_punct(toks, i + 1, "?."):
            i = _parse_member(toks, i, ast, stmts)
            continue
        if _is_punct(toks, i + 1, "("):
            end = _match_paren(toks, i + 1)
            args = _collect_args(toks[i + 2 : end])
            stmts.append(
                Stmt("other", _span(toks, i, end + 1), name=t.text, args=args)
            )
            stmts.extend(_gstring_reads(toks, i + 2, end))
            i = end + 1
            continue
        if t.text == "subscribe":
            # paren-less call form: subscribe dev, "attr.value", handler
            end = _line_end(toks, i)
            args = _collect_args(toks[i + 1 : end])
            stmts.append(Stmt("other", _span(toks, i, end), name="subscribe", args=args))
            i = end
            continue
        # unrecognized statement: swallow the rest of the line
        end = _line_end(toks, i)
        stmts.append(Stmt("other", _span(toks, i, end)))
        stmts.extend(_gstring_reads(toks, i, end))
        i = end
    return stmts


def _parse_member(toks: list[Token], i: int, ast: SmartAppAst, stmts: list[Stmt]) -> int:
    dev = toks[i].text
    j = i + 2
    if j >= len(toks) or toks[j].kind != "ident":
        end = _line_end(toks, i)
        stmts.append(Stmt("other", _span(toks, i, end)))
        return end
    member = toks[j].text
    if _is_punct(toks, j + 1, "("):
        end = _match_paren(toks, j + 1)
        span = _span(toks, i, end + 1)
        args = _collect_args(toks[j + 2 : end])
        if dev == "log":
            stmts.append(Stmt("other", span, name=f"log.{member}", args=args))
            stmts.extend(_gstring_reads(toks, j + 2, end))
        elif member == "currentValue" and args and args[0].quoted:
            stmts.append(Stmt("device_property", span, device_id=dev, name=args[0].text))
        else:
            stmts.append(Stmt("device_call", span, device_id=dev, name=member, args=args))
        return end + 1
    if member.startswith("current") and len(member) > len("current"):
        span = _span(toks, i, j + 1)
        stmts.append(
            Stmt("device_property", span, device_id=dev, name=_decap(member[len("current") :]))
        )
        return j + 1
    # paren-less member call (log.debug "...") or anything else: other
    end = _line_end(toks, i)
    name = f"{dev}.{member}" if dev == "log" else None
    stmts.append(Stmt("other", _span(toks, i, end), name=name))
    stmts.extend(_gstring_reads(toks, i, end))
    return end


# condition shapes accepted inside if(...):
#   dev.currentValue("attr") == "lit"      dev.currentAttr == "lit"
def _match_condition(expr: list[Token]) -> tuple[str, str, str] | None:
    # safe navigation reads the same as a plain dot here
    e = [
        Token("punct", ".", t.line, t.col, t.start, t.end)
        if t.kind == "punct" and t.text == "?."
        else t
        for t in expr
    ]
    if (
        len(e) == 8
        and e[0].kind == "ident"
        and _is_punct(e, 1, ".")
        and e[2].kind == "ident"
        and e[2].text == "currentValue"
        and _is_punct(e, 3, "(")
        and e[4].kind == "str"
        and _is_punct(e, 5, ")")
        and _is_punct(e, 6, "==")
        and e[7].kind == "str"
    ):
        return e[0].text, e[4].text, e[7].text
    if (
        len(e) == 5
        and e[0].kind == "ident"
        and _is_punct(e, 1, ".")
        and e[2].kind == "ident"
        and e[2].text.startswith("current")
        and len(e[2].text) > len("current")
        and _is_punct(e, 3, "==")
        and e[4].kind == "str"
    ):
        return e[0].text, _decap(e[2].text[len("current") :]), e[4].text
    return None


def _parse_if(toks: list[Token], i: int, ast: SmartAppAst, stmts: list[Stmt]) -> int:
    close_paren = _match_paren(toks, i + 1)
    expr = toks[i + 2 : close_paren]
    j = close_paren + 1
    if _is_punct(toks, j, "{"):
        close = _match_brace(toks, j)
        body = tuple(_parse_statements(toks[j + 1 : close], ast))
        nxt = close + 1
    else:
        end = _line_end(toks, j) if j < len(toks) else j
        body = tuple(_parse_statements(toks[j:end], ast))
        nxt = end
    span = _span(toks, i, nxt)
    matched = _match_condition(expr)
    if matched:
        dev, attr, lit = matched
        stmts.append(Stmt("condition", span, device_id=dev, name=attr, value=lit, body=body))
    else:
        stmts.append(Stmt("other", span, body=body))
    # else-branch statements become actions of the same rule, condition-free
    if nxt < len(toks) and toks[nxt].kind == "ident" and toks[nxt].text == "else":
        j = nxt + 1
        if _is_punct(toks, j, "{"):
            close = _match_brace(toks, j)
            stmts.extend(_parse_statements(toks[j + 1 : close], ast))
            nxt = close + 1
        elif j < len(toks) and toks[j].kind == "ident" and toks[j].text == "if":
            nxt = _parse_if(toks, j, ast, stmts)
        else:
            end = _line_end(toks, j) if j < len(toks) else j
            stmts.extend(_parse_statements(toks[j:end], ast))
            nxt = end
    return nxt


def extract_subscriptions(ast: SmartAppAst) -> list[Subscription]:
    """One Subscription per subscribe() call in any method body. The quoted
    event string splits on its first dot into (attribute, value); a bare
    identifier event means attribute and handler are that identifier."""
    subs: list[Subscription] = []
    for stmts in ast.methods.values():
        _walk_subscribes(stmts, subs, ast)
    return subs


def _walk_subscribes(stmts: list[Stmt] | tuple[Stmt, ...], out: list[Subscription], ast: SmartAppAst) -> None:
    for st in stmts:
        if st.kind == "other" and st.name == "subscribe":
            sub = _subscription_from_args(st.args, ast)
            if sub is not None:
                out.append(sub)
        if st.body:
            _walk_subscribes(st.body, out, ast)


def _subscription_from_args(args: tuple[CallArg, ...], ast: SmartAppAst) -> Subscription | None:
    if len(args) < 2:
        ast.warnings.append("subscribe call with fewer than 2 arguments ignored")
        return None
    device = args[0].text
    event = args[1]
    if event.quoted:
        attribute, dot, value = event.text.partition(".")
        val = value if dot else None
        if len(args) < 3:
            ast.warnings.append(f"subscribe({device}, ...) has no handler; ignored")
            return None
        return Subscription(device, attribute, val, args[2].text)
    # unquoted event (e.g. appTouch): the identifier doubles as the handler
    handler = args[2].text if len(args) >= 3 else event.text
    return Subscription(device, event.text, None, handler)


def resolve_device_capability(ast: SmartAppAst, device_id: str) -> str | None:
    """Declared capability for a device id; None for pseudo-devices/unknowns."""
    if device_id in PSEUDO_DEVICES:
        return None
    for decl in ast.inputs:
        if decl.device_id == device_id:
            return decl.capability
    return None

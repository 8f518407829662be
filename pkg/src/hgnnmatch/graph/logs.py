import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

from hgnnmatch.errors import DataError

logger = logging.getLogger(__name__)

UrlKey = tuple[int, ...]


class Event(NamedTuple):
    ts: int  # epoch seconds
    tokens: UrlKey


@dataclass(frozen=True)
class DeviceLog:
    """One device's time-ordered event sequence."""

    device_id: str
    events: tuple[Event, ...]

    def __post_init__(self):
        if not self.events:
            raise DataError(f"Device {self.device_id!r} has no events")
        prev = None
        for i, ev in enumerate(self.events):
            if not ev.tokens:
                raise DataError(f"Device {self.device_id!r}: event {i} has no url tokens")
            if prev is not None and ev.ts < prev:
                raise DataError(f"Device {self.device_id!r}: timestamp decreases at event {i} ({ev.ts} < {prev})")
            prev = ev.ts

    @classmethod
    def from_urls(cls, device_id: str, urls: list, start_ts: int = 0) -> "DeviceLog":
        """Convenience builder: each url is an int, a token list, or any hashable mapped to one token."""
        vocab: dict = {}
        events = []
        for i, url in enumerate(urls):
            if isinstance(url, int):
                tokens: UrlKey = (url,)
            elif isinstance(url, (list | tuple)):
                tokens = tuple(int(t) for t in url)
            else:
                tokens = (vocab.setdefault(url, len(vocab)),)
            events.append(Event(start_ts + i, tokens))
        return cls(device_id, tuple(events))

    @property
    def n(self) -> int:
        return len(self.events)

    def url_keys(self) -> list[UrlKey]:
        return [ev.tokens for ev in self.events]

    def to_json(self) -> dict:
        return {"device_id": self.device_id, "events": [{"ts": ev.ts, "tokens": list(ev.tokens)} for ev in self.events]}


def _parse_line(obj: object, line_no: int) -> DeviceLog:
    if not isinstance(obj, dict):
        raise DataError(f"expected a JSON object, got {type(obj).__name__}", line=line_no)
    missing = {"device_id", "events"} - obj.keys()
    if missing:
        raise DataError(f"missing fields {sorted(missing)}", line=line_no)

    if not isinstance(obj["events"], list):
        raise DataError(f"events must be a list, got {type(obj['events']).__name__}", line=line_no)

    events = []
    for i, raw in enumerate(obj["events"]):
        try:
            ts = raw["ts"]
            tokens = raw["tokens"]
        except (KeyError, TypeError) as err:
            raise DataError(f"event {i} lacks 'ts'/'tokens'", line=line_no) from err
        if not isinstance(ts, int) or isinstance(ts, bool):
            raise DataError(f"event {i} timestamp must be an integer, got {ts!r}", line=line_no)
        if not isinstance(tokens, list) or not all(isinstance(t, int) for t in tokens):
            raise DataError(f"event {i} tokens must be a list of integers", line=line_no)
        events.append(Event(ts, tuple(tokens)))

    try:
        return DeviceLog(str(obj["device_id"]), tuple(events))
    except DataError as err:
        raise DataError(str(err), line=line_no) from err


def load_logs(path: Path) -> list[DeviceLog]:
    """Read JSON-lines device logs; blank lines are skipped, problems are reported by line number."""
    path = Path(path)
    try:
        raw_lines = path.read_bytes().splitlines()
    except FileNotFoundError as err:
        raise DataError(f"Log file not found: {path}") from err

    logs: list[DeviceLog] = []
    seen: set[str] = set()
    for line_no, raw_line in enumerate(raw_lines, start=1):
        try:
            line = raw_line.decode("utf-8")
        except UnicodeDecodeError as err:
            raise DataError(f"invalid UTF-8 at byte {err.start}", line=line_no) from err
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as err:
            logger.error("Malformed JSON in %s at line %d: %s", path, line_no, err.msg)
            raise DataError(f"malformed JSON: {err.msg}", line=line_no) from err
        log = _parse_line(obj, line_no)
        if log.device_id in seen:
            raise DataError(f"duplicate device_id {log.device_id!r}", line=line_no)
        seen.add(log.device_id)
        logs.append(log)

    logger.info("Loaded %d device logs from %s", len(logs), path)
    return logs


def write_logs(logs: list[DeviceLog], path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        for log in logs:
            fh.write(json.dumps(log.to_json(), separators=(",", ":")))
            fh.write("\n")
    return path

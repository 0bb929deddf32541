from knowledgpt.kb.base import EntityCandidate, EntityInfo, KbBackend
from knowledgpt.kb.filekb import FileKb, FormatError, load_file_kb
from knowledgpt.kb.remote import HttpTransport, MockTransport, RemoteKb, TransportError

__all__ = [
    "EntityCandidate",
    "EntityInfo",
    "FileKb",
    "FormatError",
    "HttpTransport",
    "KbBackend",
    "MockTransport",
    "RemoteKb",
    "TransportError",
    "load_file_kb",
]

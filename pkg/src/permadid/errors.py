"""Exception hierarchy. Everything raised on purpose derives from PermadidError."""


class PermadidError(Exception):
    code = "error"


# weave
class WeaveError(PermadidError):
    pass


class OversizeData(WeaveError):
    code = "OversizeData"


class MalformedTag(WeaveError):
    code = "MalformedTag"


class NothingToMine(WeaveError):
    code = "NothingToMine"


class NotFound(PermadidError):
    code = "NotFound"


class EmptyBundle(WeaveError):
    code = "EmptyBundle"


class CorruptSnapshot(WeaveError):
    code = "CorruptSnapshot"


# names
class NameError_(PermadidError):
    pass


class InvalidName(NameError_):
    code = "InvalidName"


class NameTaken(NameError_):
    code = "NameTaken"


class NotOwner(NameError_):
    code = "NotOwner"


class UnknownName(NameError_, NotFound):
    code = "UnknownName"


# DIDs
class DidError(PermadidError):
    pass


class InvalidKey(DidError, ValueError):
    code = "InvalidKey"


class NoAuthenticationKey(DidError):
    code = "NoAuthenticationKey"


class InvalidDocument(DidError):
    code = "InvalidDocument"


class ParseError(DidError):
    code = "ParseError"


class UntrustedUpdate(DidError):
    code = "UntrustedUpdate"


# BBS
class BbsError(PermadidError, ValueError):
    code = "BbsError"


# credentials
class CredentialError(PermadidError):
    pass


class DuplicatePath(CredentialError):
    code = "DuplicatePath"


class NonScalarValue(CredentialError):
    code = "NonScalarValue"


class SchemaViolation(CredentialError):
    code = "SchemaViolation"


class UnresolvableIssuer(CredentialError):
    code = "UnresolvableIssuer"


class PredicateOnMissingPath(CredentialError):
    code = "PredicateOnMissingPath"


class UnsupportedOperator(CredentialError):
    code = "UnsupportedOperator"


class UnknownPath(CredentialError):
    code = "UnknownPath"


class InvalidCredential(CredentialError):
    code = "InvalidCredential"


class NotIssuer(CredentialError):
    code = "NotIssuer"


# protocol
class NoMatchingCredential(PermadidError):
    code = "NoMatchingCredential"


# keystore
class KeystoreError(PermadidError):
    pass


class WrongPassphrase(KeystoreError):
    code = "WrongPassphrase"


class PermissionDenied(KeystoreError):
    code = "PermissionDenied"


# gateway
class BindFailure(PermadidError):
    code = "BindFailure"

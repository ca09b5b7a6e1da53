"""Chat-completion providers: the shared contract, the offline oracle, the remote client."""

from .base import ChatProvider, Message, ProviderResponse
from .oracle import OracleProvider
from .remote import RemoteChatProvider

__all__ = ["ChatProvider", "Message", "ProviderResponse", "OracleProvider", "RemoteChatProvider"]

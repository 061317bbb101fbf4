"""kumoforge: API-mediated cloud-drive evidence acquisition.

Discovers the full file catalog of a cloud-drive account (including
revision histories and cloud-native documents), lets an investigator
select targets, and acquires them into a hash-verified, logged local
evidence tree.  Ships with a deterministic local drive simulator that
the whole acquisition pipeline is validated against.
"""

__version__ = "1.0.0"

APP_NAME = "kumoforge"

# Tool identity stamped into chain-of-custody records, e.g. "kumoforge-1.0.0".
APPLICATION_TAG = f"{APP_NAME}-{__version__}"

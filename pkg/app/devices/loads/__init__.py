"""Fixed, thermal, deferrable and curtailable loads."""

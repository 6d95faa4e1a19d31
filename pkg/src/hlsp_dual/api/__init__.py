"""HTTP layer of the toolkit."""

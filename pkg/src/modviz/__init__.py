"""Domain-coloring visualizations of modular forms."""

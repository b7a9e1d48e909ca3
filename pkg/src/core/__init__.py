# Core model

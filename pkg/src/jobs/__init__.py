# CLI jobs

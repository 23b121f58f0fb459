# kz-associator test suite

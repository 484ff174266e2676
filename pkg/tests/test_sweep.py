import operator

from python.sweep import run_tasks


def test_results_in_task_order():
    results, statuses = run_tasks(operator.add, [(1, 2), (3, 4), (5, 6)], names=['a', 'b', 'c'])
    assert results == [3, 7, 11]
    assert [s.name for s in statuses] == ['a', 'b', 'c']
    assert all(s.ok for s in statuses)


def test_failures_are_isolated():
    results, statuses = run_tasks(operator.truediv, [(1, 2), (1, 0), (3, 1)])
    assert results == [0.5, None, 3.0]
    assert [s.ok for s in statuses] == [True, False, True]
    assert statuses[1].message.startswith('ZeroDivisionError')
    assert statuses[1].to_json() == {'index': 1, 'name': 'task_1', 'status': 'failed',
                                     'message': statuses[1].message}


def test_worker_count_does_not_change_results():
    args = [(i, i * i) for i in range(12)]
    serial, _ = run_tasks(operator.mul, args, workers=1)
    parallel, statuses = run_tasks(operator.mul, args, workers=3)
    assert serial == parallel
    assert [s.index for s in statuses] == list(range(12))
